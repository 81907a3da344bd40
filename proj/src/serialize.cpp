#include "advenc/serialize.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace advenc {

namespace {

constexpr char kMagic[8] = {'A', 'D', 'V', 'N', 'E', 'T', '0', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) throw IoError("network file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  write_u64(os, bits);
}

double read_f64(std::istream& is) {
  const std::uint64_t bits = read_u64(is);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

void write_string(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
  const std::uint64_t n = read_u64(is);
  if (n > (1ULL << 24)) throw IoError("network file: unreasonable string length");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw IoError("network file truncated");
  return s;
}

void write_matrix(std::ostream& os, const Matrix& m) {
  write_u64(os, m.rows());
  write_u64(os, m.cols());
  for (double v : m.values()) write_f64(os, v);
}

Matrix read_matrix(std::istream& is) {
  const std::uint64_t r = read_u64(is);
  const std::uint64_t c = read_u64(is);
  if (r * c > (1ULL << 28)) throw IoError("network file: unreasonable matrix size");
  Matrix m(r, c);
  for (double& v : m.values()) v = read_f64(is);
  return m;
}

}  // namespace

// Accesses Network internals for (de)serialization.
class ModelIo {
 public:
  static void write(const Network& net, std::ostream& os) {
    os.write(kMagic, 8);
    write_string(os, net.seed_lineage_);
    write_u64(os, net.mode_ == Mode::Eval ? 1 : 0);
    write_u64(os, static_cast<std::uint64_t>(net.adam_step_count_));
    std::ostringstream eng;
    eng << net.dropout_rng_.engine();
    write_string(os, eng.str());
    write_u64(os, net.specs_.size());
    for (std::size_t i = 0; i < net.specs_.size(); ++i) {
      const LayerSpec& s = net.specs_[i];
      write_u64(os, static_cast<std::uint64_t>(s.kind));
      switch (s.kind) {
        case LayerKind::Linear:
          write_u64(os, s.in_dim);
          write_u64(os, s.out_dim);
          write_matrix(os, net.weights_[i]);
          write_matrix(os, net.biases_[i]);
          write_matrix(os, net.adam_m_weight_[i]);
          write_matrix(os, net.adam_v_weight_[i]);
          write_matrix(os, net.adam_m_bias_[i]);
          write_matrix(os, net.adam_v_bias_[i]);
          break;
        case LayerKind::LeakyReLU:
          write_f64(os, s.slope);
          break;
        case LayerKind::Dropout:
          write_f64(os, s.rate);
          break;
        default:
          break;
      }
    }
  }

  static Network read(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
      throw IoError("not a network file (bad magic)");
    Network net;
    net.seed_lineage_ = read_string(is);
    net.mode_ = read_u64(is) == 1 ? Mode::Eval : Mode::Train;
    net.adam_step_count_ = static_cast<std::int64_t>(read_u64(is));
    const std::string eng_state = read_string(is);
    std::istringstream eng(eng_state);
    eng >> net.dropout_rng_.engine();
    if (!eng) throw IoError("network file: bad rng state");
    const std::uint64_t n = read_u64(is);
    if (n == 0 || n > 4096) throw IoError("network file: unreasonable layer count");
    net.specs_.resize(n);
    net.weights_.assign(n, Matrix());
    net.biases_.assign(n, Matrix());
    net.adam_m_weight_.assign(n, Matrix());
    net.adam_v_weight_.assign(n, Matrix());
    net.adam_m_bias_.assign(n, Matrix());
    net.adam_v_bias_.assign(n, Matrix());
    for (std::size_t i = 0; i < n; ++i) {
      LayerSpec s;
      s.kind = static_cast<LayerKind>(read_u64(is));
      switch (s.kind) {
        case LayerKind::Linear:
          s.in_dim = read_u64(is);
          s.out_dim = read_u64(is);
          net.weights_[i] = read_matrix(is);
          net.biases_[i] = read_matrix(is);
          net.adam_m_weight_[i] = read_matrix(is);
          net.adam_v_weight_[i] = read_matrix(is);
          net.adam_m_bias_[i] = read_matrix(is);
          net.adam_v_bias_[i] = read_matrix(is);
          if (net.weights_[i].rows() != s.in_dim || net.weights_[i].cols() != s.out_dim)
            throw IoError("network file: weight shape mismatch at layer " + std::to_string(i));
          break;
        case LayerKind::LeakyReLU:
          s.slope = read_f64(is);
          break;
        case LayerKind::Dropout:
          s.rate = read_f64(is);
          break;
        case LayerKind::ReLU:
        case LayerKind::Sigmoid:
        case LayerKind::Softmax:
          break;
        default:
          throw IoError("network file: unknown layer kind at layer " + std::to_string(i));
      }
      s.validate();
      net.specs_[i] = s;
    }
    return net;
  }
};

void write_network(const Network& net, std::ostream& os) { ModelIo::write(net, os); }

Network read_network(std::istream& is) { return ModelIo::read(is); }

void save_network(const Network& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for write: " + path);
  ModelIo::write(net, os);
  if (!os) throw IoError("write failed: " + path);
}

Network load_network(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  return ModelIo::read(is);
}

}  // namespace advenc
