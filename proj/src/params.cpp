#include "dcst/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dcst/errors.hpp"
#include "dcst/rng.hpp"

namespace dcst {

void Param::resize(Eigen::Index rows, Eigen::Index cols) {
  value = Matrix::Zero(rows, cols);
  grad = Matrix::Zero(rows, cols);
  m = Matrix::Zero(rows, cols);
  v = Matrix::Zero(rows, cols);
}

Param& ParameterStore::add(const std::string& name, Eigen::Index rows,
                           Eigen::Index cols) {
  if (rows < 1 || cols < 1)
    throw ShapeError("parameter '" + name + "' needs positive dimensions");
  auto [it, inserted] = params_.try_emplace(name);
  if (!inserted) throw UsageError("duplicate parameter name '" + name + "'");
  it->second.resize(rows, cols);
  return it->second;
}

Param& ParameterStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw UsageError("unknown parameter '" + name + "'");
  return it->second;
}

const Param& ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw UsageError("unknown parameter '" + name + "'");
  return it->second;
}

void ParameterStore::zero_grad() {
  for (auto& [_, p] : params_) p.grad.setZero(p.value.rows(), p.value.cols());
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

std::size_t ParameterStore::copy_values_from(const ParameterStore& other,
                                             const std::string& prefix) {
  std::size_t copied = 0;
  for (const auto& [name, src] : other.params_) {
    if (name.compare(0, prefix.size(), prefix) != 0) continue;
    Param& dst = get(name);
    if (dst.value.rows() != src.value.rows() || dst.value.cols() != src.value.cols())
      throw ShapeError("copy_values_from: shape mismatch for '" + name + "'");
    dst.value = src.value;
    ++copied;
  }
  return copied;
}

bool ParameterStore::values_equal(const ParameterStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  auto a = params_.begin();
  auto b = other.params_.begin();
  for (; a != params_.end(); ++a, ++b) {
    if (a->first != b->first) return false;
    const Matrix& x = a->second.value;
    const Matrix& y = b->second.value;
    if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
    if (std::memcmp(x.data(), y.data(), sizeof(double) * x.size()) != 0)
      return false;
  }
  return true;
}

void init_uniform(Param& p, double bound, Rng& rng) {
  // Row-major fill order keeps draws independent of storage order.
  for (Eigen::Index i = 0; i < p.value.rows(); ++i)
    for (Eigen::Index j = 0; j < p.value.cols(); ++j)
      p.value(i, j) = rng.uniform(-bound, bound);
}

void init_glorot(Param& p, Rng& rng) {
  const double bound =
      std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
  init_uniform(p, bound, rng);
}

void init_normal(Param& p, double stddev, Rng& rng) {
  for (Eigen::Index i = 0; i < p.value.rows(); ++i)
    for (Eigen::Index j = 0; j < p.value.cols(); ++j)
      p.value(i, j) = stddev * rng.normal();
}

void adam_update(ParameterStore& store, const AdamConfig& config) {
  const std::int64_t step = store.step() + 1;
  store.set_step(step);
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
  for (auto& [name, p] : store) {
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols())
      throw ShapeError("adam_update: gradient shape mismatch for '" + name + "'");
    p.m = config.beta1 * p.m + (1.0 - config.beta1) * p.grad;
    p.v = config.beta2 * p.v + (1.0 - config.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= config.lr * (p.m.array() / bc1) /
                       ((p.v.array() / bc2).sqrt() + config.eps);
  }
}

// ---- archive --------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'D', 'C', 'S', 'T', 'A', 'R', 'C', '\0'};

template <class T>
void put_le(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
}

template <class T>
T get_le(const std::string& in, std::size_t& pos, const std::string& source) {
  if (pos + sizeof(T) > in.size()) throw DataError("truncated archive", source);
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(T);
  return static_cast<T>(v);
}

}  // namespace

std::string serialize_archive(const Archive& archive) {
  nlohmann::json header;
  header["meta"] = archive.meta;
  nlohmann::json index = nlohmann::json::array();
  for (const auto& [name, t] : archive.tensors)
    index.push_back({{"name", name}, {"shape", {t.rows(), t.cols()}}});
  header["tensors"] = index;
  const std::string text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kArchiveSchemaVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  for (const auto& [name, t] : archive.tensors) {
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      for (Eigen::Index j = 0; j < t.cols(); ++j) {
        const double x = t(i, j);
        if (!std::isfinite(x))
          throw NumericError("non-finite value in tensor '" + name + "'");
        put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x));
      }
  }
  return out;
}

Archive deserialize_archive(const std::string& bytes, const std::string& source) {
  if (bytes.size() < sizeof(kMagic) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw DataError("not a model archive (bad magic)", source);
  std::size_t pos = sizeof(kMagic);
  const auto version = get_le<std::uint32_t>(bytes, pos, source);
  if (version != kArchiveSchemaVersion)
    throw DataError("unsupported archive schema version " + std::to_string(version),
                    source);
  const auto len = get_le<std::uint64_t>(bytes, pos, source);
  if (pos + len > bytes.size()) throw DataError("truncated archive header", source);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, len));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("corrupt archive header: ") + e.what(), source);
  }
  pos += len;
  Archive a;
  a.meta = header.at("meta");
  for (const auto& entry : header.at("tensors")) {
    const std::string name = entry.at("name");
    const Eigen::Index rows = entry.at("shape").at(0);
    const Eigen::Index cols = entry.at("shape").at(1);
    Matrix t(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        t(i, j) = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos, source));
    a.tensors.emplace(name, std::move(t));
  }
  if (pos != bytes.size()) throw DataError("trailing bytes in archive", source);
  return a;
}

void write_archive(const std::filesystem::path& path, const Archive& archive) {
  const std::string bytes = serialize_archive(archive);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write archive", path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Archive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open archive", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_archive(ss.str(), path.string());
}

void export_store(const ParameterStore& store, const std::string& prefix,
                  Archive& archive) {
  for (const auto& [name, p] : store) archive.tensors[prefix + name] = p.value;
}

void import_store(ParameterStore& store, const std::string& prefix,
                  const Archive& archive) {
  for (auto& [name, p] : store) {
    auto it = archive.tensors.find(prefix + name);
    if (it == archive.tensors.end())
      throw DataError("archive lacks tensor '" + prefix + name + "'");
    if (it->second.rows() != p.value.rows() || it->second.cols() != p.value.cols())
      throw DataError("archive tensor '" + prefix + name + "' has wrong shape");
    p.value = it->second;
  }
}

}  // namespace dcst
