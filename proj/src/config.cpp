#include "tumorinv/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <variant>

namespace tumorinv {

namespace {

std::string join(const std::vector<std::string>& errors) {
  std::string msg = "invalid configuration:";
  for (const std::string& e : errors) msg += "\n  " + e;
  return msg;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::istringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <class T>
std::string fmt_list(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>) out += fmt(values[i]);
    else out += std::to_string(values[i]);
  }
  return out;
}

const std::set<std::string> kSections = {"experiment", "grid",  "solver", "initial", "prior",
                                         "truth",      "observation", "mcmc", "sweep", "mconv"};

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

struct Section {
  std::vector<std::string> order;
  std::map<std::string, Entry> entries;
};

/// Typed access to the parsed key/value text, collecting every error.
class Reader {
 public:
  std::map<std::string, Section> sections;
  std::vector<std::string> errors;

  Entry* find(const std::string& sec, const std::string& key) {
    auto s = sections.find(sec);
    if (s == sections.end()) return nullptr;
    auto e = s->second.entries.find(key);
    if (e == s->second.entries.end()) return nullptr;
    e->second.used = true;
    return &e->second;
  }

  bool has(const std::string& sec, const std::string& key) const {
    auto s = sections.find(sec);
    return s != sections.end() && s->second.entries.count(key) > 0;
  }

  void missing(const std::string& sec, const std::string& key) {
    errors.push_back("missing required key \"" + sec + "." + key + "\"");
  }

  void bad(const Entry& e, const std::string& sec, const std::string& key, const std::string& what) {
    errors.push_back("line " + std::to_string(e.line) + ": " + sec + "." + key + ": " + what);
  }

  bool to_double(const std::string& text, double& out) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
  }

  template <class T>
  void number(const std::string& sec, const std::string& key, T& out, bool required = false) {
    Entry* e = find(sec, key);
    if (!e) {
      if (required) missing(sec, key);
      return;
    }
    if constexpr (std::is_integral_v<T>) {
      T v{};
      const char* last = e->value.data() + e->value.size();
      auto [ptr, ec] = std::from_chars(e->value.data(), last, v);
      if (ec != std::errc() || ptr != last) return bad(*e, sec, key, "expected an integer, got \"" + e->value + "\"");
      out = v;
    } else {
      double v = 0.0;
      if (!to_double(e->value, v)) return bad(*e, sec, key, "expected a number, got \"" + e->value + "\"");
      out = v;
    }
  }

  template <class T>
  void list(const std::string& sec, const std::string& key, std::vector<T>& out, bool required = false) {
    Entry* e = find(sec, key);
    if (!e) {
      if (required) missing(sec, key);
      return;
    }
    out.clear();
    for (const std::string& item : split_list(e->value)) {
      double v = 0.0;
      if (!to_double(item, v)) return bad(*e, sec, key, "expected a number list, got \"" + e->value + "\"");
      if constexpr (std::is_integral_v<T>) {
        if (v != std::floor(v)) return bad(*e, sec, key, "expected integers");
      }
      out.push_back(static_cast<T>(v));
    }
  }

  void text(const std::string& sec, const std::string& key, std::string& out, bool required = false) {
    Entry* e = find(sec, key);
    if (!e) {
      if (required) missing(sec, key);
      return;
    }
    out = e->value;
  }

  void flag(const std::string& sec, const std::string& key, bool& out) {
    Entry* e = find(sec, key);
    if (!e) return;
    if (e->value == "true" || e->value == "1") out = true;
    else if (e->value == "false" || e->value == "0") out = false;
    else bad(*e, sec, key, "expected true or false");
  }

  template <class E>
  void choice(const std::string& sec, const std::string& key, E& out, const std::map<std::string, E>& options) {
    Entry* e = find(sec, key);
    if (!e) return;
    auto it = options.find(e->value);
    if (it != options.end()) {
      out = it->second;
      return;
    }
    std::string allowed;
    for (const auto& [name, _] : options) allowed += (allowed.empty() ? "" : ", ") + name;
    bad(*e, sec, key, "expected one of " + allowed + ", got \"" + e->value + "\"");
  }

  void parse(const std::string& input) {
    std::istringstream in(input);
    std::string raw;
    std::string current;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const auto hash = raw.find('#');
      const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') {
          errors.push_back("line " + std::to_string(line) + ": unterminated section header");
          continue;
        }
        current = trim(s.substr(1, s.size() - 2));
        if (!kSections.count(current)) {
          errors.push_back("line " + std::to_string(line) + ": unknown section [" + current + "]");
        }
        sections[current];
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        errors.push_back("line " + std::to_string(line) + ": expected key = value");
        continue;
      }
      if (current.empty()) {
        errors.push_back("line " + std::to_string(line) + ": key outside of a section");
        continue;
      }
      const std::string key = trim(s.substr(0, eq));
      const std::string value = trim(s.substr(eq + 1));
      if (key.empty() || value.empty()) {
        errors.push_back("line " + std::to_string(line) + ": empty key or value");
        continue;
      }
      Section& sec = sections[current];
      if (sec.entries.count(key)) {
        errors.push_back("line " + std::to_string(line) + ": duplicate key " + current + "." + key);
        continue;
      }
      sec.order.push_back(key);
      sec.entries[key] = Entry{value, line, false};
    }
  }

  void report_unused() {
    for (auto& [name, sec] : sections) {
      if (!kSections.count(name)) continue;
      for (const std::string& key : sec.order) {
        const Entry& e = sec.entries.at(key);
        if (!e.used) errors.push_back("line " + std::to_string(e.line) + ": unknown key " + name + "." + key);
      }
    }
  }
};

const std::set<std::string> kPriorReserved = {"basis", "h0", "stddevs", "decay"};

std::optional<ScalarLaw> parse_law(const std::string& value) {
  const std::vector<std::string> parts = split_list(value);
  if (parts.size() != 3) return std::nullopt;
  double a = 0.0;
  double b = 0.0;
  Reader r;
  if (!r.to_double(parts[1], a) || !r.to_double(parts[2], b)) return std::nullopt;
  if (parts[0] == "normal") return NormalLaw{a, b};
  if (parts[0] == "uniform") return UniformLaw{a, b};
  return std::nullopt;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors) : std::runtime_error(join(errors)), errors_(std::move(errors)) {}

Grid ExperimentConfig::build() const { return build_grid(grid.dim, grid.bounds, grid.cells); }

ForwardMap ExperimentConfig::forward_map() const {
  ForwardMap map{build(), initial, prior, solver, observation.op};
  return map;
}

void ExperimentConfig::validate() const {
  std::vector<std::string> errors;
  auto check = [&](const std::string& where, auto&& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      errors.push_back(where + ": " + e.what());
    }
  };

  if (id.empty()) errors.push_back("experiment.id must not be empty");
  if (grid.dim != 1 && grid.dim != 2) errors.push_back("grid.dim must be 1 or 2");
  std::optional<Grid> g;
  if (grid.dim == 1 || grid.dim == 2) check("grid", [&] { g = build(); });
  check("solver", [&] { solver.validate(); });
  check("prior", [&] { prior.validate(); });

  if (truth.z.size() != prior.params.size() || truth.g.size() != prior.field.stddevs.size()) {
    errors.push_back("truth must give a value for every prior entry (" + std::to_string(prior.dimension()) +
                     " values)");
  } else {
    for (std::size_t i = 0; i < prior.params.size(); ++i) {
      if (const auto* u = std::get_if<UniformLaw>(&prior.params[i].law)) {
        if (truth.z[i] < u->lo || truth.z[i] > u->hi) {
          errors.push_back("truth." + prior.params[i].name + " lies outside its uniform prior support");
        }
      }
    }
  }

  check("observation", [&] { observation.op.validate(solver.t_final); });
  if (observation.sigma.empty()) errors.push_back("observation.sigma must be given");
  for (double s : observation.sigma) {
    if (!(s > 0.0)) {
      errors.push_back("observation.sigma entries must be > 0");
      break;
    }
  }
  if (g && observation.sigma.size() > 1) {
    const std::size_t n = observation.op.times.size() * observation.op.per_time(*g);
    if (observation.sigma.size() != n) {
      errors.push_back("observation.sigma has " + std::to_string(observation.sigma.size()) +
                       " entries, expected 1 or " + std::to_string(n));
    }
  }
  if (g && observation.op.mode == ObservationMode::Functionals) {
    const auto [xlo, xhi] = std::pair{grid.bounds[0], grid.bounds[1]};
    for (const GaussianBump& b : observation.op.bumps) {
      if (b.cx < xlo || b.cx > xhi || (grid.dim == 2 && (b.cy < grid.bounds[2] || b.cy > grid.bounds[3]))) {
        errors.push_back("observation: test function centre lies outside the domain");
        break;
      }
    }
  }

  if (mcmc.iterations < 10 || mcmc.paper_iterations < 10) errors.push_back("mcmc iterations must be >= 10");
  if (mcmc.runs < 1 || mcmc.paper_runs < 1) errors.push_back("mcmc runs must be >= 1");
  if (!(mcmc.burn_in >= 0.0 && mcmc.burn_in < 1.0)) errors.push_back("mcmc.burn_in must lie in [0, 1)");
  if (!(mcmc.proposal_scale > 0.0)) errors.push_back("mcmc.proposal_scale must be > 0");
  if (!mcmc.proposal_sd.empty()) {
    if (mcmc.proposal_sd.size() != prior.dimension()) {
      errors.push_back("mcmc.proposal_sd needs " + std::to_string(prior.dimension()) + " entries");
    }
    if (std::any_of(mcmc.proposal_sd.begin(), mcmc.proposal_sd.end(), [](double s) { return !(s > 0.0); })) {
      errors.push_back("mcmc.proposal_sd entries must be > 0");
    }
  }
  if (mcmc.threads < 0) errors.push_back("mcmc.threads must be >= 0");

  if (sweep.parameter != SweepParameter::None) {
    if (sweep.values.empty()) errors.push_back("sweep.values must not be empty");
    for (double v : sweep.values) {
      if (sweep.parameter == SweepParameter::Sigma && !(v > 0.0)) {
        errors.push_back("sweep: sigma values must be > 0");
        break;
      }
      if (sweep.parameter == SweepParameter::M && !(v > 1.0)) {
        errors.push_back("sweep: m values must be > 1");
        break;
      }
    }
  }

  if (!mconv.m.empty()) {
    if (mconv.m.size() < 2) errors.push_back("mconv.m needs at least two entries");
    for (std::size_t i = 0; i < mconv.m.size(); ++i) {
      if (!(mconv.m[i] > 1.0)) errors.push_back("mconv.m entries must be > 1");
      if (i > 0 && mconv.m[i] < mconv.m[i - 1]) errors.push_back("mconv.m must be ascending");
    }
  }
  if (mconv.samples < 100) errors.push_back("mconv.samples must be >= 100");
  if (mconv.bootstrap < 200) errors.push_back("mconv.bootstrap must be >= 200");

  if (!errors.empty()) throw ConfigError(std::move(errors));
}

ExperimentConfig parse_config(const std::string& text) {
  Reader r;
  r.parse(text);
  ExperimentConfig c;

  r.text("experiment", "id", c.id, true);
  std::string output;
  r.text("experiment", "output", output);
  if (!output.empty()) c.output = output;

  r.number("grid", "dim", c.grid.dim, true);
  std::vector<double> xb;
  std::vector<double> yb;
  int nx = 0;
  int ny = 0;
  r.list("grid", "x", xb, true);
  r.number("grid", "nx", nx, true);
  if (c.grid.dim == 2) {
    r.list("grid", "y", yb, true);
    r.number("grid", "ny", ny, true);
  }
  if (xb.size() == 2 && (c.grid.dim == 1 || yb.size() == 2)) {
    c.grid.bounds = xb;
    c.grid.cells = {nx};
    if (c.grid.dim == 2) {
      c.grid.bounds.insert(c.grid.bounds.end(), yb.begin(), yb.end());
      c.grid.cells.push_back(ny);
    }
  } else if (!xb.empty()) {
    r.errors.push_back("grid.x and grid.y take two values: lo, hi");
  }

  r.number("solver", "m", c.solver.m, true);
  r.number("solver", "dt", c.solver.dt, true);
  r.number("solver", "T", c.solver.t_final, true);
  r.number("solver", "tolerance", c.solver.tolerance);
  r.number("solver", "max_iterations", c.solver.max_iterations);
  r.flag("solver", "clamp_negative", c.solver.clamp_negative);
  r.choice("solver", "linear_solver", c.solver.solver,
           std::map<std::string, PredictionSolver>{
               {"auto", PredictionSolver::Auto}, {"direct", PredictionSolver::Direct},
               {"krylov", PredictionSolver::Krylov}});

  r.choice("initial", "shape", c.initial.shape,
           std::map<std::string, InitialShape>{{"flower", InitialShape::Flower}, {"disk", InitialShape::Disk}});
  std::vector<double> center;
  r.list("initial", "center", center);
  if (!center.empty()) {
    if (center.size() != 2) r.errors.push_back("initial.center takes two values");
    else {
      c.initial.cx = center[0];
      c.initial.cy = center[1];
    }
  }
  r.number("initial", "amplitude", c.initial.amplitude);
  r.number("initial", "radius2", c.initial.radius2);

  r.choice("prior", "basis", c.prior.field.basis,
           std::map<std::string, BasisKind>{
               {"none", BasisKind::None}, {"test3", BasisKind::Test3}, {"sine", BasisKind::TensorSine}});
  r.number("prior", "h0", c.prior.field.h0);
  r.list("prior", "stddevs", c.prior.field.stddevs);
  r.number("prior", "decay", c.prior.field.decay);
  if (auto it = r.sections.find("prior"); it != r.sections.end()) {
    for (const std::string& key : it->second.order) {
      if (kPriorReserved.count(key)) continue;
      Entry* e = r.find("prior", key);
      if (key == "g") {
        r.bad(*e, "prior", key, "\"g\" names the field coefficients; use stddevs");
        continue;
      }
      if (auto law = parse_law(e->value)) c.prior.params.push_back({key, *law});
      else r.bad(*e, "prior", key, "expected \"normal, mean, sd\" or \"uniform, lo, hi\"");
    }
  }
  if (c.prior.dimension() == 0) r.errors.push_back("prior: no unknowns declared");

  for (const ParamPrior& p : c.prior.params) {
    double v = 0.0;
    if (!r.has("truth", p.name)) {
      r.missing("truth", p.name);
      continue;
    }
    r.number("truth", p.name, v);
    c.truth.z.push_back(v);
  }
  if (!c.prior.field.stddevs.empty()) r.list("truth", "g", c.truth.g, true);

  r.choice("observation", "mode", c.observation.op.mode,
           std::map<std::string, ObservationMode>{
               {"full_grid", ObservationMode::FullGrid}, {"functionals", ObservationMode::Functionals}});
  r.list("observation", "times", c.observation.op.times, true);
  r.list("observation", "sigma", c.observation.sigma, true);
  r.choice("observation", "scale", c.observation.op.scale,
           std::map<std::string, BumpScale>{
               {"peak", BumpScale::Peak}, {"unit_mass", BumpScale::UnitMass}, {"cell_sum", BumpScale::CellSum}});
  double width = 0.1;
  r.number("observation", "width", width);
  std::vector<int> ci;
  std::vector<int> cj;
  std::vector<double> cx;
  std::vector<double> cy;
  r.list("observation", "centers_i", ci);
  r.list("observation", "centers_j", cj);
  r.list("observation", "centers_x", cx);
  r.list("observation", "centers_y", cy);
  if (!ci.empty() || !cj.empty()) {
    if (ci.size() != cj.size()) {
      r.errors.push_back("observation.centers_i and centers_j must have the same length");
    } else if (c.grid.cells.size() == static_cast<std::size_t>(c.grid.dim) && c.grid.bounds.size() == 2u * c.grid.dim) {
      // cell-centre coordinates x_i = lo + (i + 1/2) dx, indices from 0
      const Axis ax{c.grid.bounds[0], c.grid.bounds[1], c.grid.cells[0]};
      const Axis ay = c.grid.dim == 2 ? Axis{c.grid.bounds[2], c.grid.bounds[3], c.grid.cells[1]} : Axis{0, 1, 1};
      for (std::size_t k = 0; k < ci.size(); ++k) {
        if (ci[k] < 0 || ci[k] >= ax.cells || (c.grid.dim == 2 && (cj[k] < 0 || cj[k] >= ay.cells))) {
          r.errors.push_back("observation: centre index (" + std::to_string(ci[k]) + ", " + std::to_string(cj[k]) +
                             ") lies outside the grid");
          continue;
        }
        c.observation.op.bumps.push_back({ax.center(ci[k]), c.grid.dim == 2 ? ay.center(cj[k]) : 0.0, width});
      }
    }
  }
  if (!cx.empty() || !cy.empty()) {
    if (!c.observation.op.bumps.empty()) r.errors.push_back("observation: give centres by index or by coordinate");
    else if (cx.size() != cy.size()) r.errors.push_back("observation.centers_x and centers_y must have the same length");
    else
      for (std::size_t k = 0; k < cx.size(); ++k) c.observation.op.bumps.push_back({cx[k], cy[k], width});
  }

  r.number("mcmc", "iterations", c.mcmc.iterations);
  r.number("mcmc", "runs", c.mcmc.runs);
  r.number("mcmc", "paper_iterations", c.mcmc.paper_iterations);
  r.number("mcmc", "paper_runs", c.mcmc.paper_runs);
  r.number("mcmc", "burn_in", c.mcmc.burn_in);
  r.number("mcmc", "proposal_scale", c.mcmc.proposal_scale);
  r.list("mcmc", "proposal_sd", c.mcmc.proposal_sd);
  r.number("mcmc", "seed", c.mcmc.seed);
  r.number("mcmc", "threads", c.mcmc.threads);

  r.choice("sweep", "parameter", c.sweep.parameter,
           std::map<std::string, SweepParameter>{
               {"none", SweepParameter::None}, {"sigma", SweepParameter::Sigma}, {"m", SweepParameter::M}});
  r.list("sweep", "values", c.sweep.values);

  r.list("mconv", "m", c.mconv.m);
  r.number("mconv", "samples", c.mconv.samples);
  r.number("mconv", "bootstrap", c.mconv.bootstrap);

  r.report_unused();
  if (!r.errors.empty()) throw ConfigError(std::move(r.errors));
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read " + path.string()});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "[experiment]\nid = " << c.id << "\noutput = " << c.output.string() << "\n\n";

  out << "[grid]\ndim = " << c.grid.dim << "\nx = " << fmt(c.grid.bounds[0]) << ", " << fmt(c.grid.bounds[1])
      << "\nnx = " << c.grid.cells[0] << '\n';
  if (c.grid.dim == 2) {
    out << "y = " << fmt(c.grid.bounds[2]) << ", " << fmt(c.grid.bounds[3]) << "\nny = " << c.grid.cells[1] << '\n';
  }

  static const char* solvers[] = {"auto", "direct", "krylov"};
  out << "\n[solver]\nm = " << fmt(c.solver.m) << "\ndt = " << fmt(c.solver.dt) << "\nT = " << fmt(c.solver.t_final)
      << "\ntolerance = " << fmt(c.solver.tolerance) << "\nmax_iterations = " << c.solver.max_iterations
      << "\nclamp_negative = " << (c.solver.clamp_negative ? "true" : "false")
      << "\nlinear_solver = " << solvers[static_cast<int>(c.solver.solver)] << '\n';

  out << "\n[initial]\nshape = " << (c.initial.shape == InitialShape::Flower ? "flower" : "disk")
      << "\ncenter = " << fmt(c.initial.cx) << ", " << fmt(c.initial.cy) << "\namplitude = " << fmt(c.initial.amplitude)
      << "\nradius2 = " << fmt(c.initial.radius2) << '\n';

  static const char* bases[] = {"none", "test3", "sine"};
  out << "\n[prior]\n";
  for (const ParamPrior& p : c.prior.params) {
    out << p.name << " = ";
    if (const auto* u = std::get_if<UniformLaw>(&p.law)) out << "uniform, " << fmt(u->lo) << ", " << fmt(u->hi);
    else {
      const auto& n = std::get<NormalLaw>(p.law);
      out << "normal, " << fmt(n.mean) << ", " << fmt(n.sd);
    }
    out << '\n';
  }
  out << "basis = " << bases[static_cast<int>(c.prior.field.basis)] << "\nh0 = " << fmt(c.prior.field.h0)
      << "\ndecay = " << fmt(c.prior.field.decay) << '\n';
  if (!c.prior.field.stddevs.empty()) out << "stddevs = " << fmt_list(c.prior.field.stddevs) << '\n';

  out << "\n[truth]\n";
  for (std::size_t i = 0; i < c.prior.params.size(); ++i) out << c.prior.params[i].name << " = " << fmt(c.truth.z[i]) << '\n';
  if (!c.truth.g.empty()) out << "g = " << fmt_list(c.truth.g) << '\n';

  const ObservationOperator& op = c.observation.op;
  out << "\n[observation]\nmode = " << to_string(op.mode) << "\ntimes = " << fmt_list(op.times)
      << "\nsigma = " << fmt_list(c.observation.sigma) << "\nscale = " << to_string(op.scale) << '\n';
  if (!op.bumps.empty()) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const GaussianBump& b : op.bumps) {
      xs.push_back(b.cx);
      ys.push_back(b.cy);
    }
    out << "width = " << fmt(op.bumps.front().width) << "\ncenters_x = " << fmt_list(xs) << "\ncenters_y = " << fmt_list(ys)
        << '\n';
  }

  out << "\n[mcmc]\niterations = " << c.mcmc.iterations << "\nruns = " << c.mcmc.runs
      << "\npaper_iterations = " << c.mcmc.paper_iterations << "\npaper_runs = " << c.mcmc.paper_runs
      << "\nburn_in = " << fmt(c.mcmc.burn_in) << "\nproposal_scale = " << fmt(c.mcmc.proposal_scale) << '\n';
  if (!c.mcmc.proposal_sd.empty()) out << "proposal_sd = " << fmt_list(c.mcmc.proposal_sd) << '\n';
  out << "seed = " << c.mcmc.seed << "\nthreads = " << c.mcmc.threads << '\n';

  static const char* sweeps[] = {"none", "sigma", "m"};
  out << "\n[sweep]\nparameter = " << sweeps[static_cast<int>(c.sweep.parameter)] << '\n';
  if (!c.sweep.values.empty()) out << "values = " << fmt_list(c.sweep.values) << '\n';

  out << "\n[mconv]\n";
  if (!c.mconv.m.empty()) out << "m = " << fmt_list(c.mconv.m) << '\n';
  out << "samples = " << c.mconv.samples << "\nbootstrap = " << c.mconv.bootstrap << '\n';
  return out.str();
}

}  // namespace tumorinv
