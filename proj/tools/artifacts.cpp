#include "artifacts.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#ifndef DEGNSE_GIT_DESCRIBE
#define DEGNSE_GIT_DESCRIBE "unknown"
#endif

namespace degnse::cli {

const char* git_describe() { return DEGNSE_GIT_DESCRIBE; }

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string Provenance::line() const {
  return "command=" + command + " config_hash=" + config_hash + " seed=" + std::to_string(seed) + " git=" + git;
}

nlohmann::json Provenance::json() const {
  return {{"command", command}, {"config_hash", config_hash}, {"seed", seed}, {"git", git}};
}

ArtifactWriter::ArtifactWriter(std::filesystem::path dir, Provenance prov) : dir_(std::move(dir)), prov_(std::move(prov)) {
  std::filesystem::create_directories(dir_);
}

namespace {

std::ofstream open_out(const std::filesystem::path& p, std::ios::openmode mode = std::ios::out) {
  std::ofstream f(p, mode | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

}  // namespace

void ArtifactWriter::csv(const std::string& name, const std::vector<std::string>& columns,
                         const std::vector<std::vector<double>>& rows) const {
  auto f = open_out(dir_ / name);
  f << "# " << prov_.line() << '\n';
  for (size_t i = 0; i < columns.size(); ++i) f << (i ? "," : "") << columns[i];
  f << '\n';
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.size(); ++i) f << (i ? "," : "") << fmt_num(r[i]);
    f << '\n';
  }
  written_.push_back(name);
}

void ArtifactWriter::json(const std::string& name, nlohmann::json body) const {
  body["provenance"] = prov_.json();
  auto f = open_out(dir_ / name);
  f << body.dump(2) << '\n';
  written_.push_back(name);
}

void ArtifactWriter::f64(const std::string& name, const Eigen::MatrixXd& m) const {
  static_assert(std::endian::native == std::endian::little, "float64 dumps assume a little-endian host");
  auto f = open_out(dir_ / name, std::ios::binary);
  f << "DEGNSE-F64 " << prov_.line() << " rows=" << m.rows() << " cols=" << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      f.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  written_.push_back(name);
}

}  // namespace degnse::cli
