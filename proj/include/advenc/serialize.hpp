#pragma once

#include <iosfwd>
#include <string>

#include "advenc/nn.hpp"

namespace advenc {

// Self-describing binary network format: layer specs, parameters and Adam
// state as raw little-endian 64-bit floats, plus the seed lineage and the
// dropout stream state. save -> load round trips are bit exact.
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

void write_network(const Network& net, std::ostream& os);
Network read_network(std::istream& is);

}  // namespace advenc
