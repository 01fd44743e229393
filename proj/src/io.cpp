#include "mfng/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mfng {

namespace {

[[noreturn]] void parse_error(const std::string& path, std::size_t offset,
                              const std::string& what) {
  throw std::runtime_error(path + ": " + what + " at byte offset " +
                           std::to_string(offset));
}

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) parse_error(path, static_cast<std::size_t>(in.tellg()), "truncated file");
  return value;
}

void check_magic(std::ifstream& in, const std::string& path, const char* magic) {
  char buf[8];
  in.read(buf, 8);
  if (!in || std::memcmp(buf, magic, 8) != 0)
    parse_error(path, 0, "bad magic");
}

}  // namespace

IdxData load_idx(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  unsigned char header[4];
  in.read(reinterpret_cast<char*>(header), 4);
  if (!in) parse_error(path, 0, "truncated header");
  if (header[0] != 0 || header[1] != 0) parse_error(path, 0, "bad magic");
  if (header[2] != 0x08) parse_error(path, 2, "unsupported element type");
  const int ndims = header[3];
  if (ndims < 1 || ndims > 4) parse_error(path, 3, "unsupported dimension count");

  IdxData data;
  std::size_t total = 1;
  for (int d = 0; d < ndims; ++d) {
    unsigned char raw[4];
    in.read(reinterpret_cast<char*>(raw), 4);
    if (!in) parse_error(path, 4 + 4 * d, "truncated dimension header");
    const std::uint32_t size = (std::uint32_t(raw[0]) << 24) |
                               (std::uint32_t(raw[1]) << 16) |
                               (std::uint32_t(raw[2]) << 8) | raw[3];
    data.dims.push_back(static_cast<int>(size));
    total *= size;
  }
  std::vector<unsigned char> payload(total);
  in.read(reinterpret_cast<char*>(payload.data()), total);
  if (static_cast<std::size_t>(in.gcount()) != total)
    parse_error(path, 4 + 4 * ndims + static_cast<std::size_t>(in.gcount()),
                "truncated payload");

  const int rows = data.dims[0];
  const int cols = rows == 0 ? 0 : static_cast<int>(total) / rows;
  data.values.resize(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      data.values(r, c) = payload[static_cast<std::size_t>(r) * cols + c] / 255.0;
  return data;
}

void write_idx(const std::string& path, const IdxData& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  const unsigned char header[4] = {0, 0, 0x08,
                                   static_cast<unsigned char>(data.dims.size())};
  out.write(reinterpret_cast<const char*>(header), 4);
  for (int dim : data.dims) {
    const auto v = static_cast<std::uint32_t>(dim);
    const unsigned char raw[4] = {
        static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(raw), 4);
  }
  for (int r = 0; r < data.values.rows(); ++r)
    for (int c = 0; c < data.values.cols(); ++c) {
      const auto byte = static_cast<unsigned char>(
          std::lround(std::clamp(data.values(r, c), 0.0, 1.0) * 255.0));
      out.write(reinterpret_cast<const char*>(&byte), 1);
    }
  if (!out) throw std::runtime_error("write failed for " + path);
}

Eigen::MatrixXd binarize(const Eigen::MatrixXd& values, double threshold) {
  return values.unaryExpr(
      [threshold](double v) { return v >= threshold ? 1.0 : 0.0; });
}

Eigen::MatrixXd bars_stripes_patterns(int rows, int cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("grid must be nonempty");
  std::vector<Eigen::VectorXd> patterns;
  auto push_unique = [&](const Eigen::VectorXd& p) {
    for (const auto& q : patterns)
      if (q == p) return;
    patterns.push_back(p);
  };
  // Bars: each column uniformly on or off.
  for (std::uint32_t mask = 0; mask < (1u << cols); ++mask) {
    Eigen::VectorXd p(rows * cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        p[r * cols + c] = (mask >> c) & 1u ? 1.0 : 0.0;
    push_unique(p);
  }
  // Stripes: each row uniformly on or off.
  for (std::uint32_t mask = 0; mask < (1u << rows); ++mask) {
    Eigen::VectorXd p(rows * cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        p[r * cols + c] = (mask >> r) & 1u ? 1.0 : 0.0;
    push_unique(p);
  }
  Eigen::MatrixXd out(patterns.size(), rows * cols);
  for (std::size_t i = 0; i < patterns.size(); ++i)
    out.row(i) = patterns[i].transpose();
  return out;
}

Eigen::MatrixXd bars_stripes_dataset(int rows, int cols, int size,
                                     std::uint64_t seed) {
  if (size < 1) throw std::invalid_argument("size must be >= 1");
  const Eigen::MatrixXd patterns = bars_stripes_patterns(rows, cols);
  PhiloxRng rng(seed, 0);
  Eigen::MatrixXd out(size, patterns.cols());
  for (int i = 0; i < size; ++i)
    out.row(i) =
        patterns.row(rng.next_below(static_cast<std::uint32_t>(patterns.rows())));
  return out;
}

Eigen::MatrixXd random_bernoulli_dataset(int size, int dim, double p,
                                         std::uint64_t seed) {
  if (size < 1) throw std::invalid_argument("size must be >= 1");
  PhiloxRng rng(seed, 0);
  Eigen::MatrixXd out(size, dim);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < dim; ++c) out(r, c) = rng.bernoulli(p) ? 1.0 : 0.0;
  return out;
}

void save_checkpoint(const std::string& path, const DbmModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.write("MFNGCKPT", 8);
  write_pod<std::uint32_t>(out, 1);  // format version
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(model.num_layers()));
  for (int n : model.layer_sizes()) write_pod<std::uint32_t>(out, n);
  const Eigen::VectorXd offsets = model.unit_offset();
  out.write(reinterpret_cast<const char*>(offsets.data()),
            offsets.size() * sizeof(double));
  const Eigen::VectorXd params = model.params();
  out.write(reinterpret_cast<const char*>(params.data()),
            params.size() * sizeof(double));
  if (!out) throw std::runtime_error("write failed for " + path);
}

DbmModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  check_magic(in, path, "MFNGCKPT");
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != 1) throw std::runtime_error(path + ": unsupported version");
  const auto n_layers = read_pod<std::uint32_t>(in, path);
  std::vector<int> sizes;
  for (std::uint32_t l = 0; l < n_layers; ++l)
    sizes.push_back(static_cast<int>(read_pod<std::uint32_t>(in, path)));
  int total = 0;
  for (int n : sizes) total += n;
  Eigen::VectorXd offsets(total);
  in.read(reinterpret_cast<char*>(offsets.data()), total * sizeof(double));
  DbmModel model(sizes, offsets);
  Eigen::VectorXd params(model.num_params());
  in.read(reinterpret_cast<char*>(params.data()),
          params.size() * sizeof(double));
  if (!in) parse_error(path, static_cast<std::size_t>(in.tellg()), "truncated file");
  model.set_params(params);
  return model;
}

void save_pool(const std::string& path, const ChainPool& pool,
               const DbmModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.write("MFNGPOOL", 8);
  write_pod<std::uint32_t>(out, 1);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(pool.size()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(model.num_layers()));
  for (int n : model.layer_sizes()) write_pod<std::uint32_t>(out, n);
  const int units = model.num_units();
  const int bytes = (units + 7) / 8;
  for (int m = 0; m < pool.size(); ++m) {
    write_pod<std::uint64_t>(out, pool.rngs[m].seed());
    write_pod<std::uint64_t>(out, pool.rngs[m].stream());
    write_pod<std::uint64_t>(out, pool.rngs[m].block());
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(pool.rngs[m].index()));
    const Eigen::VectorXd flat = model.to_flat(pool.states[m]);
    std::vector<unsigned char> packed(bytes, 0);
    for (int i = 0; i < units; ++i)
      if (flat[i] != 0.0) packed[i / 8] |= 1u << (i % 8);
    out.write(reinterpret_cast<const char*>(packed.data()), bytes);
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

ChainPool load_pool(const std::string& path, const DbmModel& model) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  check_magic(in, path, "MFNGPOOL");
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != 1) throw std::runtime_error(path + ": unsupported version");
  const auto chains = read_pod<std::uint32_t>(in, path);
  const auto n_layers = read_pod<std::uint32_t>(in, path);
  if (static_cast<int>(n_layers) != model.num_layers())
    throw std::runtime_error(path + ": layer count mismatch");
  for (std::uint32_t l = 0; l < n_layers; ++l)
    if (static_cast<int>(read_pod<std::uint32_t>(in, path)) !=
        model.layer_sizes()[l])
      throw std::runtime_error(path + ": layer size mismatch");
  const int units = model.num_units();
  const int bytes = (units + 7) / 8;
  ChainPool pool;
  for (std::uint32_t m = 0; m < chains; ++m) {
    const auto seed = read_pod<std::uint64_t>(in, path);
    const auto stream = read_pod<std::uint64_t>(in, path);
    const auto block = read_pod<std::uint64_t>(in, path);
    const auto index = read_pod<std::uint32_t>(in, path);
    PhiloxRng rng(seed, stream);
    rng.restore(block, static_cast<int>(index));
    pool.rngs.push_back(rng);
    std::vector<unsigned char> packed(bytes);
    in.read(reinterpret_cast<char*>(packed.data()), bytes);
    if (!in) parse_error(path, static_cast<std::size_t>(in.tellg()), "truncated file");
    Eigen::VectorXd flat(units);
    for (int i = 0; i < units; ++i)
      flat[i] = (packed[i / 8] >> (i % 8)) & 1u ? 1.0 : 0.0;
    pool.states.push_back(model.to_joint(flat));
  }
  return pool;
}

}  // namespace mfng
