#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "dcst/autograd.hpp"

namespace dcst {

class Rng;

struct Param {
  Matrix value;
  Matrix grad;
  Matrix m;  // Adam first moment
  Matrix v;  // Adam second moment

  void resize(Eigen::Index rows, Eigen::Index cols);
};

// Named tensors plus Adam state. Names are unique; iteration is in name order.
class ParameterStore {
 public:
  Param& add(const std::string& name, Eigen::Index rows, Eigen::Index cols);
  Param& get(const std::string& name);
  const Param& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) > 0; }

  void zero_grad();
  std::size_t size() const noexcept { return params_.size(); }
  std::size_t parameter_count() const;
  std::int64_t step() const noexcept { return step_; }
  void set_step(std::int64_t s) noexcept { step_ = s; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  // Copies values of every parameter whose name starts with prefix from
  // another store (shapes must match). Returns the number copied.
  std::size_t copy_values_from(const ParameterStore& other,
                               const std::string& prefix = {});
  bool values_equal(const ParameterStore& other) const;

 private:
  std::map<std::string, Param> params_;
  std::int64_t step_ = 0;
};

void init_uniform(Param& p, double bound, Rng& rng);
// Uniform in +-sqrt(6 / (fan_in + fan_out)) with fan_in = rows, fan_out = cols.
void init_glorot(Param& p, Rng& rng);
void init_normal(Param& p, double stddev, Rng& rng);

struct AdamConfig {
  double lr = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam step from the gradients held in the store. The step
// counter advances once per call.
void adam_update(ParameterStore& store, const AdamConfig& config);

// Serialized model file: magic, schema version, JSON header (metadata plus
// tensor index) and row-major little-endian float64 tensor data.
struct Archive {
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, Matrix> tensors;
};

inline constexpr std::uint32_t kArchiveSchemaVersion = 1;

void write_archive(const std::filesystem::path& path, const Archive& archive);
Archive read_archive(const std::filesystem::path& path);
std::string serialize_archive(const Archive& archive);
Archive deserialize_archive(const std::string& bytes, const std::string& source);

void export_store(const ParameterStore& store, const std::string& prefix,
                  Archive& archive);
// Loads all tensors under prefix into the store; shapes must match exactly.
void import_store(ParameterStore& store, const std::string& prefix,
                  const Archive& archive);

}  // namespace dcst
