#include "epdscreen/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "epdscreen/core.hpp"

namespace epdscreen {

namespace {

using nlohmann::json;

const char* kCommands[] = {"concavify", "solve-n",      "outer",    "sweep-twotype",
                           "region-width", "verify-epd", "converge", "universal",
                           "check"};

json to_json(const RunConfig& c) {
  return json{{"command", c.command},
              {"thetas", c.thetas},
              {"masses", c.masses},
              {"dist", c.dist},
              {"range_lo", c.range_lo},
              {"range_hi", c.range_hi},
              {"n", c.n},
              {"pbar", c.pbar},
              {"multipliers", c.multipliers},
              {"cost_kind", c.cost_kind},
              {"gamma", c.gamma},
              {"alpha", c.alpha},
              {"family", c.family},
              {"eta_max", c.eta_max},
              {"grid", c.grid},
              {"trials", c.trials},
              {"sweep_grid", c.sweep_grid},
              {"v_h", c.v_h},
              {"pi_h", c.pi_h},
              {"gammas", c.gammas},
              {"n_list", c.n_list},
              {"tol", c.tol},
              {"seed", c.seed},
              {"threads", c.threads},
              {"out", c.out},
              {"format", c.format},
              {"stamp", c.stamp}};
}

template <typename T>
void read_field(const json& j, const char* key, T& into) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw DomainError(std::string("config field '") + key + "' has the wrong type");
  }
}

RunConfig from_json(const json& j) {
  RunConfig c;
  read_field(j, "command", c.command);
  read_field(j, "thetas", c.thetas);
  read_field(j, "masses", c.masses);
  read_field(j, "dist", c.dist);
  read_field(j, "range_lo", c.range_lo);
  read_field(j, "range_hi", c.range_hi);
  read_field(j, "n", c.n);
  read_field(j, "pbar", c.pbar);
  read_field(j, "multipliers", c.multipliers);
  read_field(j, "cost_kind", c.cost_kind);
  read_field(j, "gamma", c.gamma);
  read_field(j, "alpha", c.alpha);
  read_field(j, "family", c.family);
  read_field(j, "eta_max", c.eta_max);
  read_field(j, "grid", c.grid);
  read_field(j, "trials", c.trials);
  read_field(j, "sweep_grid", c.sweep_grid);
  read_field(j, "v_h", c.v_h);
  read_field(j, "pi_h", c.pi_h);
  read_field(j, "gammas", c.gammas);
  read_field(j, "n_list", c.n_list);
  read_field(j, "tol", c.tol);
  read_field(j, "seed", c.seed);
  read_field(j, "threads", c.threads);
  read_field(j, "out", c.out);
  read_field(j, "format", c.format);
  read_field(j, "stamp", c.stamp);
  return c;
}

}  // namespace

void validate_config(const RunConfig& c) {
  bool known = false;
  for (const char* cmd : kCommands) known = known || c.command == cmd;
  if (!known) throw DomainError("config field 'command' is not a known subcommand");
  if (c.format != "csv" && c.format != "json")
    throw DomainError("config field 'format' must be csv or json");
  if (c.dist != "uniform") throw DomainError("config field 'dist' must be uniform");
  if (!(c.gamma > 0)) throw DomainError("config field 'gamma' must be positive");
  if (c.cost_kind == "scaled_entropy") {
    if (!(c.alpha > 1)) throw DomainError("config field 'alpha' must exceed 1");
  } else if (c.cost_kind != "entropy") {
    throw DomainError("config field 'cost_kind' must be entropy or scaled_entropy");
  }
  if (c.n < 1) throw DomainError("config field 'n' must be >= 1");
  if (!(c.range_lo > 0) || !(c.range_hi > c.range_lo))
    throw DomainError("config fields 'range_lo'/'range_hi' need 0 < lo < hi");
  if (c.multipliers != "myerson" && c.multipliers != "optimize")
    throw DomainError("config field 'multipliers' must be myerson or optimize");
  if (c.trials < 1) throw DomainError("config field 'trials' must be >= 1");
  if (c.grid < 10) throw DomainError("config field 'grid' must be >= 10");
  if (c.sweep_grid < 2) throw DomainError("config field 'sweep_grid' must be >= 2");
  if (!(c.tol > 0)) throw DomainError("config field 'tol' must be positive");
  if (c.threads < 0) throw DomainError("config field 'threads' must be >= 0");
  if (!c.thetas.empty() || !c.masses.empty()) {
    if (c.thetas.size() != c.masses.size())
      throw DomainError("config fields 'thetas'/'masses' must have equal length");
    double total = 0;
    for (double m : c.masses) total += m;
    if (std::abs(total - 1.0) > 1e-9)
      throw DomainError("config field 'masses' must sum to one");
  }
  for (std::size_t i = 1; i < c.gammas.size(); ++i)
    if (!(c.gammas[i] > c.gammas[i - 1]))
      throw DomainError("config field 'gammas' must be increasing");
  for (std::size_t i = 1; i < c.n_list.size(); ++i)
    if (c.n_list[i] <= c.n_list[i - 1])
      throw DomainError("config field 'n_list' must be increasing");
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("config file not readable: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DomainError(std::string("config parse error: ") + e.what());
  }
  RunConfig c = from_json(j);
  validate_config(c);
  return c;
}

void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("config file not writable: " + path);
  out << to_json(cfg).dump(2) << '\n';
}

std::string config_comment_header(const RunConfig& cfg) {
  const json j = to_json(cfg);
  std::ostringstream os;
  for (const auto& [key, value] : j.items()) os << "# " << key << "=" << value.dump() << '\n';
  return os.str();
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("EPD_SCREEN_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

}  // namespace epdscreen
