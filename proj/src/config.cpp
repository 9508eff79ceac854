#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "amfc/error.hpp"
#include "amfc/harness.hpp"

namespace amfc {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"model", {"id", "c_F", "c_G", "lin_F", "lin_G", "offset_F", "offset_G", "T"}},
      {"grid", {"nx", "nt"}},
      {"hierarchy", {"N", "R", "store_stride", "samples", "lipschitz_pairs"}},
      {"mfc", {"tol", "max_iter", "R", "nx", "nt", "kappa_factor"}},
      {"mc", {"nsim", "seed", "bridge", "substeps"}},
      {"output", {"dir", "workers"}},
      {"barrier", {"C", "nx"}},
      {"fp", {"drift"}},
  };
  return s;
}

void check_keys(const toml::table& root) {
  for (const auto& [section, node] : root) {
    const std::string name(section.str());
    auto it = schema().find(name);
    if (it == schema().end()) throw DomainError("config: unknown section [" + name + "]");
    const toml::table* tbl = node.as_table();
    if (!tbl) throw DomainError("config: [" + name + "] must be a table");
    for (const auto& [key, value] : *tbl)
      if (!it->second.count(std::string(key.str())))
        throw DomainError("config: unknown key " + name + "." + std::string(key.str()));
  }
}

void apply_override(toml::table& root, const std::string& spec) {
  const auto eq = spec.find('=');
  const auto dot = spec.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw DomainError("override must look like section.key=value: " + spec);
  const std::string section = spec.substr(0, dot), key = spec.substr(dot + 1, eq - dot - 1);
  const std::string value = spec.substr(eq + 1);
  if (!root.contains(section)) root.insert(section, toml::table{});
  toml::table* tbl = root[section].as_table();
  if (!tbl) throw DomainError("override targets a non-table section: " + section);
  try {
    toml::table parsed = toml::parse("v = " + value);
    tbl->insert_or_assign(key, *parsed.get("v"));
  } catch (const toml::parse_error&) {
    tbl->insert_or_assign(key, value);
  }
}

template <class T>
void read(const toml::table& root, const char* section, const char* key, T& target) {
  const toml::node* node = root.at_path(std::string(section) + "." + key).node();
  if (!node) return;
  if constexpr (std::is_same_v<T, bool>) {
    if (!node->is_boolean()) throw DomainError(std::string("config: ") + section + "." + key + " must be a boolean");
    target = node->value<bool>().value();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!node->is_string()) throw DomainError(std::string("config: ") + section + "." + key + " must be a string");
    target = node->value<std::string>().value();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!node->is_number()) throw DomainError(std::string("config: ") + section + "." + key + " must be a number");
    target = node->value<double>().value();
  } else {
    if (!node->is_integer()) throw DomainError(std::string("config: ") + section + "." + key + " must be an integer");
    const auto v = node->value<std::int64_t>().value();
    if (v < 0) throw DomainError(std::string("config: ") + section + "." + key + " must be nonnegative");
    target = static_cast<T>(v);
  }
}

ExperimentConfig from_table(toml::table& root, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) apply_override(root, o);
  check_keys(root);
  ExperimentConfig c;
  auto& p = c.params;
  read(root, "model", "id", c.model_id);
  read(root, "model", "c_F", p.c_F);
  read(root, "model", "c_G", p.c_G);
  read(root, "model", "lin_F", p.lin_F);
  read(root, "model", "lin_G", p.lin_G);
  read(root, "model", "offset_F", p.offset_F);
  read(root, "model", "offset_G", p.offset_G);
  read(root, "model", "T", p.T);
  read(root, "grid", "nx", c.nx);
  read(root, "grid", "nt", c.nt);
  if (const toml::node* n = root.at_path("hierarchy.N").node()) {
    c.N_list.clear();
    if (n->is_integer()) {
      c.N_list.push_back(static_cast<int>(n->value<std::int64_t>().value()));
    } else if (const toml::array* arr = n->as_array()) {
      for (const auto& e : *arr) {
        if (!e.is_integer()) throw DomainError("config: hierarchy.N entries must be integers");
        c.N_list.push_back(static_cast<int>(e.value<std::int64_t>().value()));
      }
    } else {
      throw DomainError("config: hierarchy.N must be an integer or an array of integers");
    }
  }
  read(root, "hierarchy", "R", c.R);
  read(root, "hierarchy", "store_stride", c.store_stride);
  read(root, "hierarchy", "samples", c.convergence_samples);
  read(root, "hierarchy", "lipschitz_pairs", c.lipschitz_pairs);
  read(root, "mfc", "tol", c.mfc_tol);
  read(root, "mfc", "max_iter", c.mfc_max_iter);
  read(root, "mfc", "R", c.mfc_R);
  read(root, "mfc", "nx", c.mfc_nx);
  read(root, "mfc", "nt", c.mfc_nt);
  read(root, "mfc", "kappa_factor", c.kappa_factor);
  read(root, "mc", "nsim", c.nsim);
  read(root, "mc", "seed", c.seed);
  read(root, "mc", "bridge", c.bridge);
  read(root, "mc", "substeps", c.substeps);
  std::string dir = c.out_dir.string();
  read(root, "output", "dir", dir);
  c.out_dir = dir;
  read(root, "output", "workers", c.workers);
  read(root, "barrier", "C", c.barrier_C);
  read(root, "barrier", "nx", c.barrier_nx);
  read(root, "fp", "drift", c.fp_drift);
  validate(c);
  return c;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "config: " << e.description() << " at line " << e.source().begin.line;
    throw DomainError(os.str());
  }
  return from_table(root, overrides);
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

void validate(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw DomainError("config: " + what);
  };
  require(c.model_id == "quadratic" || c.model_id == "zero", "model.id must be \"quadratic\" or \"zero\"");
  require(c.params.T > 0.0, "model.T must be positive");
  require(c.nx >= 2 && c.nt >= 1, "grid.nx >= 2 and grid.nt >= 1 required");
  require(!c.N_list.empty(), "hierarchy.N must not be empty");
  for (int N : c.N_list) require(N >= 1 && N <= 4, "hierarchy.N entries must lie in 1..4");
  require(c.R >= 1.0, "hierarchy.R must be at least 1");
  require(c.store_stride >= 1 && c.nt % c.store_stride == 0, "hierarchy.store_stride must divide grid.nt");
  require(c.convergence_samples >= 1 && c.lipschitz_pairs >= 1, "sample counts must be positive");
  require(c.mfc_tol > 0.0 && c.mfc_max_iter >= 1 && c.mfc_R > 0.0, "mfc.tol, mfc.max_iter, mfc.R must be positive");
  require(c.mfc_nx >= 2 && c.mfc_nt >= 1, "mfc.nx >= 2 and mfc.nt >= 1 required");
  require(c.mfc_nt % (c.nt / c.store_stride) == 0, "mfc.nt must be a multiple of grid.nt / store_stride");
  require(c.kappa_factor >= 2.0, "mfc.kappa_factor must be at least 2");
  require(c.nsim >= 100 && c.substeps >= 4, "mc.nsim >= 100 and mc.substeps >= 4 required");
  require(c.barrier_C > 0.0 && c.barrier_nx >= 2, "barrier.C and barrier.nx must be positive");
  require(c.workers >= 1, "output.workers must be positive");
}

ModelSpec build_model(const ExperimentConfig& c) {
  return c.model_id == "zero" ? make_zero_model(c.params.T) : make_quadratic_model(c.params);
}

}  // namespace amfc
