#pragma once

#include <stdexcept>
#include <string>

namespace advenc {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dimension or layout violation; message names the offending operand/layer.
struct ShapeError : Error {
  using Error::Error;
};

// Malformed input file; message carries row/column location where known.
struct ParseError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// Non-finite loss or similar runtime failure; message carries epoch/batch.
struct TrainError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace advenc
