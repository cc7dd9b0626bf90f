#include "config.hpp"

#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

namespace degnse::cli {

namespace {

namespace pt = boost::property_tree;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
T parse_scalar(const std::string& key, const std::string& s) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
      if (s == "false" || s == "0" || s == "no" || s == "off") return false;
      throw boost::bad_lexical_cast();
    } else {
      return boost::lexical_cast<T>(s);
    }
  } catch (const boost::bad_lexical_cast&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + s + "'");
  }
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& s) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(parse_scalar<T>(key, item.substr(b, e - b + 1)));
  }
  return out;
}

// One entry per accepted key: parses the raw string into the config and prints the canonical value.
struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> show;
};

template <class Get>
Field num(Get get) {
  return {[get](ExperimentConfig& c, const std::string& s) {
            auto& ref = get(c);
            ref = parse_scalar<std::decay_t<decltype(ref)>>("", s);
          },
          [get](const ExperimentConfig& c) {
            auto& ref = get(c);
            using T = std::decay_t<decltype(ref)>;
            if constexpr (std::is_same_v<T, double>) return fmt_double(ref);
            else if constexpr (std::is_same_v<T, bool>) return std::string(ref ? "true" : "false");
            else return std::to_string(ref);
          }};
}

template <class T, class Get>
Field list(Get get) {
  return {[get](ExperimentConfig& c, const std::string& s) { get(c) = parse_list<T>("", s); },
          [get](const ExperimentConfig& c) {
            std::string out;
            for (const auto& v : get(c)) {
              if (!out.empty()) out += ',';
              if constexpr (std::is_same_v<T, double>) out += fmt_double(v);
              else out += std::to_string(v);
            }
            return out;
          }};
}

#define DEGNSE_FIELD(expr) [](auto& c) -> auto& { return c.expr; }

const std::map<std::string, Field>& schema() {
  static const std::map<std::string, Field> s = {
      {"model.N_max", num(DEGNSE_FIELD(model.N_max))},
      {"model.N0", num(DEGNSE_FIELD(model.noise.N0))},
      {"model.N", num(DEGNSE_FIELD(model.N))},
      {"model.alpha0", num(DEGNSE_FIELD(model.noise.alpha0))},
      {"model.q_scale", num(DEGNSE_FIELD(model.noise.q_scale))},
      {"model.qbar", num(DEGNSE_FIELD(model.noise.qbar))},
      {"model.rho", num(DEGNSE_FIELD(model.cutoff.rho))},
      {"model.delta", num(DEGNSE_FIELD(model.cutoff.delta))},
      {"model.cutoff", num(DEGNSE_FIELD(model.use_cutoff))},
      {"run.T", num(DEGNSE_FIELD(T))},
      {"run.dt", num(DEGNSE_FIELD(dt))},
      {"run.seed", num(DEGNSE_FIELD(seed))},
      {"run.workers", num(DEGNSE_FIELD(workers))},
      {"simulate.replicas", num(DEGNSE_FIELD(simulate.replicas))},
      {"simulate.x_norm", num(DEGNSE_FIELD(simulate.x_norm))},
      {"simulate.record_stride", num(DEGNSE_FIELD(simulate.record_stride))},
      {"simulate.noise_stride", num(DEGNSE_FIELD(simulate.noise_stride))},
      {"simulate.stop_at_exit", num(DEGNSE_FIELD(simulate.stop_at_exit))},
      {"coupled.replicas", num(DEGNSE_FIELD(coupled.replicas))},
      {"coupled.x_norm", num(DEGNSE_FIELD(coupled.x_norm))},
      {"malliavin.t", num(DEGNSE_FIELD(malliavin.t))},
      {"malliavin.dt", num(DEGNSE_FIELD(malliavin.dt))},
      {"malliavin.x_norm", num(DEGNSE_FIELD(malliavin.x_norm))},
      {"malliavin.replicas", num(DEGNSE_FIELD(malliavin.replicas))},
      {"malliavin.eps_grid", list<double>(DEGNSE_FIELD(malliavin.eps_grid))},
      {"malliavin.q", num(DEGNSE_FIELD(malliavin.q))},
      {"malliavin.direction_delta", num(DEGNSE_FIELD(malliavin.direction_delta))},
      {"hormander.N_limit", num(DEGNSE_FIELD(hormander.N_limit))},
      {"hormander.points", num(DEGNSE_FIELD(hormander.points))},
      {"hormander.ball_ratio", num(DEGNSE_FIELD(hormander.ball_ratio))},
      {"hormander.case3_rhos", list<double>(DEGNSE_FIELD(hormander.case3_rhos))},
      {"hormander.case3_ratio", num(DEGNSE_FIELD(hormander.case3_ratio))},
      {"hormander.case3_samples", num(DEGNSE_FIELD(hormander.case3_samples))},
      {"control.carrier_N_max", num(DEGNSE_FIELD(control.carrier_N_max))},
      {"control.N_verify", num(DEGNSE_FIELD(control.N_verify))},
      {"control.eps", num(DEGNSE_FIELD(control.eps))},
      {"control.pairs", num(DEGNSE_FIELD(control.pairs))},
      {"control.x_norm", num(DEGNSE_FIELD(control.x_norm))},
      {"control.y_norm", num(DEGNSE_FIELD(control.y_norm))},
      {"control.steps_per_phase", num(DEGNSE_FIELD(control.steps_per_phase))},
      {"control.w_samples", num(DEGNSE_FIELD(control.w_samples))},
      {"verify.criteria", list<int>(DEGNSE_FIELD(verify.criteria))},
  };
  return s;
}

#undef DEGNSE_FIELD

void assign(ExperimentConfig& c, const std::string& key, const std::string& value) {
  const auto& s = schema();
  auto it = s.find(key);
  if (it == s.end()) throw ConfigError("unknown config key '" + key + "'");
  try {
    it->second.set(c, value);
  } catch (const ConfigError&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  }
}

void validate(const ExperimentConfig& c) {
  try {
    c.model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  need(c.dt > 0.0, "run.dt must be positive");
  need(c.T > 0.0, "run.T must be positive");
  need(c.workers >= 1, "run.workers must be >= 1");
  need(c.simulate.replicas >= 1 && c.coupled.replicas >= 1 && c.malliavin.replicas >= 1,
       "replica counts must be >= 1");
  need(c.simulate.record_stride >= 1 && c.simulate.noise_stride >= 1, "simulate strides must be >= 1");
  need(c.malliavin.t > 0.0 && c.malliavin.dt > 0.0 && c.malliavin.dt <= c.malliavin.t,
       "malliavin.t and malliavin.dt must satisfy 0 < dt <= t");
  need(c.malliavin.direction_delta >= 0.0, "malliavin.direction_delta must be nonnegative");
  need(c.hormander.points >= 1, "hormander.points must be >= 1");
  need(c.hormander.ball_ratio >= 0.0 && c.hormander.ball_ratio <= 0.25, "hormander.ball_ratio must lie in [0, 1/4]");
  need(!c.hormander.case3_rhos.empty(), "hormander.case3_rhos must not be empty");
  need(c.control.eps > 0.0, "control.eps must be positive");
  need(c.control.pairs >= 1 && c.control.steps_per_phase >= 1 && c.control.w_samples >= 1,
       "control counts must be >= 1");
  need(c.control.carrier_N_max >= 0 && c.control.carrier_N_max <= c.model.N_max,
       "control.carrier_N_max must lie in [0, model.N_max]");
  need(c.control.N_verify == 0 || c.control.N_verify > c.model.N_max,
       "control.N_verify must exceed model.N_max");
  for (int k : c.verify.criteria) need(k >= 1 && k <= 11, "verify.criteria entries must lie in 1..11");
}

}  // namespace

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  ExperimentConfig c;
  if (!path.empty()) {
    pt::ptree tree;
    try {
      pt::read_ini(path, tree);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError(std::string("cannot read config: ") + e.what());
    }
    for (const auto& [section, body] : tree) {
      if (body.empty()) throw ConfigError("config key '" + section + "' must sit inside a section");
      for (const auto& [key, leaf] : body) assign(c, section + "." + key, leaf.data());
    }
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + o + "'");
    assign(c, o.substr(0, eq), o.substr(eq + 1));
  }
  validate(c);
  for (const auto& [key, f] : schema()) {
    if (key == "run.seed" || key == "run.workers") continue;
    c.canonical += key + "=" + f.show(c) + "\n";
  }
  c.hash = fnv1a64(c.canonical);
  return c;
}

}  // namespace degnse::cli
