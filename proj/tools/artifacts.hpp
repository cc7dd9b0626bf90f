#pragma once

#include <json.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace degnse::cli {

struct Provenance {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string git;

  std::string line() const;  // "command=... config_hash=... seed=... git=..."
  nlohmann::json json() const;
};

const char* git_describe();

// Every writer stamps the provenance: a '#' header line for CSV, a "provenance" object for JSON,
// and a newline-terminated text header before the little-endian float64 payload for binaries.
class ArtifactWriter {
 public:
  ArtifactWriter(std::filesystem::path dir, Provenance prov);

  const Provenance& provenance() const { return prov_; }
  const std::filesystem::path& dir() const { return dir_; }

  void csv(const std::string& name, const std::vector<std::string>& columns,
           const std::vector<std::vector<double>>& rows) const;
  void json(const std::string& name, nlohmann::json body) const;
  // Row-major matrix dump.
  void f64(const std::string& name, const Eigen::MatrixXd& m) const;

  std::vector<std::string> written() const { return written_; }

 private:
  std::filesystem::path dir_;
  Provenance prov_;
  mutable std::vector<std::string> written_;
};

std::string fmt_num(double v);

}  // namespace degnse::cli
