#include "ibf/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ibf/errors.hpp"

namespace ibf {

using nlohmann::json;

namespace {

class Reader {
 public:
  explicit Reader(std::vector<std::string>& issues) : issues_(issues) {}

  // Returns false (and records a violation) when j is not an object.
  bool object(const json& j, const std::string& path, std::set<std::string> allowed) {
    if (!j.is_object()) {
      issues_.push_back(label(path) + " must be an object");
      return false;
    }
    for (const auto& [key, _] : j.items())
      if (!allowed.count(key))
        issues_.push_back("unknown key \"" + key + "\"" + (path.empty() ? "" : " in " + path));
    return true;
  }

  void number(const json& j, const std::string& key, const std::string& path, double& out) {
    if (!j.contains(key)) return;
    const json& v = j[key];
    if (!v.is_number()) {
      issues_.push_back(join(path, key) + " must be a number");
      return;
    }
    out = v.get<double>();
    if (!std::isfinite(out)) issues_.push_back(join(path, key) + " must be finite");
  }

  template <class Int>
  void integer(const json& j, const std::string& key, const std::string& path, Int& out) {
    if (!j.contains(key)) return;
    const json& v = j[key];
    if (v.is_number_integer()) {
      if (v.is_number_unsigned()) {
        const auto u = v.get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(std::numeric_limits<Int>::max())) {
          issues_.push_back(join(path, key) + " is out of range");
          return;
        }
        out = static_cast<Int>(u);
      } else {
        const auto s = v.get<std::int64_t>();
        if (s < static_cast<std::int64_t>(std::numeric_limits<Int>::min()) ||
            (s > 0 && static_cast<std::uint64_t>(s) >
                          static_cast<std::uint64_t>(std::numeric_limits<Int>::max()))) {
          issues_.push_back(join(path, key) + " is out of range");
          return;
        }
        out = static_cast<Int>(s);
      }
      return;
    }
    issues_.push_back(join(path, key) + " must be an integer");
  }

  void text(const json& j, const std::string& key, const std::string& path, std::string& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_string()) {
      issues_.push_back(join(path, key) + " must be a string");
      return;
    }
    out = j[key].get<std::string>();
  }

  void boolean(const json& j, const std::string& key, const std::string& path, bool& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_boolean()) {
      issues_.push_back(join(path, key) + " must be true or false");
      return;
    }
    out = j[key].get<bool>();
  }

  bool pair(const json& v, const std::string& where, std::array<double, 2>& out) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      issues_.push_back(where + " must be a pair of numbers");
      return false;
    }
    out = {v[0].get<double>(), v[1].get<double>()};
    return true;
  }

  void vec2(const json& j, const std::string& key, const std::string& path,
            std::array<double, 2>& out) {
    if (j.contains(key)) pair(j[key], join(path, key), out);
  }

  void numbers(const json& j, const std::string& key, const std::string& path,
               std::vector<double>& out) {
    if (!j.contains(key)) return;
    const json& v = j[key];
    if (!v.is_array()) {
      issues_.push_back(join(path, key) + " must be an array of numbers");
      return;
    }
    std::vector<double> tmp;
    for (const auto& e : v) {
      if (!e.is_number()) {
        issues_.push_back(join(path, key) + " must be an array of numbers");
        return;
      }
      tmp.push_back(e.get<double>());
    }
    out = std::move(tmp);
  }

  void points(const json& j, const std::string& key, const std::string& path,
              std::vector<std::array<double, 2>>& out) {
    if (!j.contains(key)) return;
    const json& v = j[key];
    if (!v.is_array()) {
      issues_.push_back(join(path, key) + " must be an array of pairs");
      return;
    }
    std::vector<std::array<double, 2>> tmp;
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::array<double, 2> p{};
      if (!pair(v[i], join(path, key) + "[" + std::to_string(i) + "]", p)) return;
      tmp.push_back(p);
    }
    out = std::move(tmp);
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }
  static std::string label(const std::string& path) {
    return path.empty() ? "the document" : path;
  }

 private:
  std::vector<std::string>& issues_;
};

void read(Reader& r, const json& j, FamilyConfig& c) {
  if (!r.object(j, "family", {"kind", "length_scale", "mix_weight", "dimension"})) return;
  r.text(j, "kind", "family", c.kind);
  r.number(j, "length_scale", "family", c.length_scale);
  r.number(j, "mix_weight", "family", c.mix_weight);
  r.integer(j, "dimension", "family", c.dimension);
}

void read(Reader& r, const json& j, SchemeConfig& c) {
  if (!r.object(j, "scheme",
                {"dt", "jitter", "factorization", "sampler", "dense_limit", "spectral_modes"}))
    return;
  r.number(j, "dt", "scheme", c.dt);
  r.number(j, "jitter", "scheme", c.jitter);
  r.text(j, "factorization", "scheme", c.factorization);
  r.text(j, "sampler", "scheme", c.sampler);
  r.integer(j, "dense_limit", "scheme", c.dense_limit);
  r.integer(j, "spectral_modes", "scheme", c.spectral_modes);
}

void read(Reader& r, const json& j, CurveConfig& c) {
  if (!r.object(j, "curve",
                {"kind", "a", "b", "center", "radius", "vertices", "closed", "refine_threshold",
                 "max_points"}))
    return;
  r.text(j, "kind", "curve", c.kind);
  r.vec2(j, "a", "curve", c.a);
  r.vec2(j, "b", "curve", c.b);
  r.vec2(j, "center", "curve", c.center);
  r.number(j, "radius", "curve", c.radius);
  r.points(j, "vertices", "curve", c.vertices);
  r.boolean(j, "closed", "curve", c.closed);
  r.number(j, "refine_threshold", "curve", c.refine_threshold);
  r.integer(j, "max_points", "curve", c.max_points);
}

void read(Reader& r, const json& j, GridConfig& c) {
  if (!r.object(j, "grid", {"cell_size", "extent"})) return;
  r.number(j, "cell_size", "grid", c.cell_size);
  r.integer(j, "extent", "grid", c.extent);
}

void read(Reader& r, const json& j, PruneConfig& c) {
  if (!r.object(j, "prune", {"depth", "max_per_cell", "cap_depth", "mode", "interval"})) return;
  r.number(j, "depth", "prune", c.depth);
  r.integer(j, "max_per_cell", "prune", c.max_per_cell);
  r.number(j, "cap_depth", "prune", c.cap_depth);
  r.text(j, "mode", "prune", c.mode);
  r.integer(j, "interval", "prune", c.interval);
}

void read(Reader& r, const json& j, TargetsConfig& c) {
  if (!r.object(j, "targets",
                {"directions", "t_grid", "R", "eps", "shape_time", "hitting_horizon"}))
    return;
  r.integer(j, "directions", "targets", c.directions);
  r.numbers(j, "t_grid", "targets", c.t_grid);
  r.number(j, "R", "targets", c.R);
  r.number(j, "eps", "targets", c.eps);
  r.number(j, "shape_time", "targets", c.shape_time);
  r.number(j, "hitting_horizon", "targets", c.hitting_horizon);
}

void read(Reader& r, const json& j, RadialConfig& c) {
  if (!r.object(j, "radial",
                {"r0", "horizon", "dt", "samples", "seeds", "r0_grid", "submartingale_replicas"}))
    return;
  r.number(j, "r0", "radial", c.r0);
  r.number(j, "horizon", "radial", c.horizon);
  r.number(j, "dt", "radial", c.dt);
  r.integer(j, "samples", "radial", c.samples);
  r.integer(j, "seeds", "radial", c.seeds);
  r.numbers(j, "r0_grid", "radial", c.r0_grid);
  r.integer(j, "submartingale_replicas", "radial", c.submartingale_replicas);
}

void read(Reader& r, const json& j, ControlConfig& c) {
  if (!r.object(j, "control", {"n", "grid_size", "dt_divisor", "q"})) return;
  r.integer(j, "n", "control", c.n);
  r.integer(j, "grid_size", "control", c.grid_size);
  r.number(j, "dt_divisor", "control", c.dt_divisor);
  r.vec2(j, "q", "control", c.q);
}

void read(Reader& r, const json& j, SplitConfig& c) {
  if (!r.object(j, "split", {"t_total", "t1", "eta", "separation", "replicas"})) return;
  r.number(j, "t_total", "split", c.t_total);
  r.numbers(j, "t1", "split", c.t1);
  r.number(j, "eta", "split", c.eta);
  r.number(j, "separation", "split", c.separation);
  r.integer(j, "replicas", "split", c.replicas);
}

void read(Reader& r, const json& j, VerifyConfig& c) {
  if (!r.object(j, "verify",
                {"eigen_points", "hitting_replicas", "shape_replicas", "robust_replicas",
                 "robust_R", "split_replicas", "submartingale_replicas", "radial_samples"}))
    return;
  r.integer(j, "eigen_points", "verify", c.eigen_points);
  r.integer(j, "hitting_replicas", "verify", c.hitting_replicas);
  r.integer(j, "shape_replicas", "verify", c.shape_replicas);
  r.integer(j, "robust_replicas", "verify", c.robust_replicas);
  r.number(j, "robust_R", "verify", c.robust_R);
  r.integer(j, "split_replicas", "verify", c.split_replicas);
  r.integer(j, "submartingale_replicas", "verify", c.submartingale_replicas);
  r.integer(j, "radial_samples", "verify", c.radial_samples);
}

void read(Reader& r, const json& j, OutputConfig& c) {
  if (!r.object(j, "output", {"dir"})) return;
  r.text(j, "dir", "output", c.dir);
}

class Checker {
 public:
  explicit Checker(std::vector<std::string>& issues) : issues_(issues) {}
  void require(bool ok, const std::string& message) {
    if (!ok) issues_.push_back(message);
  }

 private:
  std::vector<std::string>& issues_;
};

bool one_of(const std::string& s, std::initializer_list<const char*> options) {
  for (const char* o : options)
    if (s == o) return true;
  return false;
}

void validate(const ExperimentConfig& c, std::vector<std::string>& issues) {
  Checker k(issues);
  k.require(one_of(c.family.kind, {"solenoidal-gaussian", "potential-gaussian", "mixture",
                                   "solenoidal", "potential"}),
            "family.kind must be one of solenoidal-gaussian, potential-gaussian, mixture");
  k.require(c.family.length_scale > 0.0, "family.length_scale must be > 0");
  k.require(c.family.mix_weight >= 0.0 && c.family.mix_weight <= 1.0,
            "family.mix_weight must lie in [0, 1]");
  k.require(c.family.dimension >= 2 && c.family.dimension <= 16,
            "family.dimension must lie in [2, 16]");

  k.require(c.scheme.dt > 0.0, "scheme.dt must be > 0");
  k.require(c.scheme.jitter >= 0.0, "scheme.jitter must be ≥ 0");
  k.require(one_of(c.scheme.factorization, {"cholesky-with-jitter", "eigenvalue-clip"}),
            "scheme.factorization must be cholesky-with-jitter or eigenvalue-clip");
  k.require(one_of(c.scheme.sampler, {"automatic", "dense", "spectral"}),
            "scheme.sampler must be automatic, dense or spectral");
  k.require(c.scheme.dense_limit >= 1, "scheme.dense_limit must be ≥ 1");
  k.require(c.scheme.spectral_modes >= 1, "scheme.spectral_modes must be ≥ 1");

  k.require(one_of(c.curve.kind, {"segment", "circle", "polyline"}),
            "curve.kind must be segment, circle or polyline");
  if (c.curve.kind == "segment")
    k.require(c.curve.a != c.curve.b, "curve.a and curve.b must differ");
  if (c.curve.kind == "circle") k.require(c.curve.radius > 0.0, "curve.radius must be > 0");
  if (c.curve.kind == "polyline")
    k.require(c.curve.vertices.size() >= 2, "curve.vertices needs at least 2 points");
  k.require(c.curve.refine_threshold > 0.0, "curve.refine_threshold must be > 0");
  k.require(c.curve.max_points >= 2, "curve.max_points must be ≥ 2");

  k.require(c.horizon >= 0.0, "horizon must be ≥ 0");
  k.require(c.replicas >= 1, "replicas must be ≥ 1");
  k.require(c.snapshot_stride >= 0, "snapshot_stride must be ≥ 0");

  k.require(c.grid.cell_size > 0.0, "grid.cell_size must be > 0");
  k.require(c.grid.extent >= 1, "grid.extent must be ≥ 1");

  k.require(c.prune.depth >= 0.0, "prune.depth must be ≥ 0");
  k.require(c.prune.max_per_cell >= 0, "prune.max_per_cell must be ≥ 0");
  k.require(c.prune.cap_depth >= 0.0, "prune.cap_depth must be ≥ 0");
  k.require(one_of(c.prune.mode, {"exterior", "any-uncovered"}),
            "prune.mode must be exterior or any-uncovered");
  k.require(c.prune.interval >= 1, "prune.interval must be ≥ 1");

  k.require(c.targets.directions >= 1, "targets.directions must be ≥ 1");
  k.require(c.targets.t_grid.size() >= 3, "targets.t_grid needs at least 3 entries");
  bool increasing = true;
  for (std::size_t i = 0; i < c.targets.t_grid.size(); ++i) {
    if (!(c.targets.t_grid[i] > 0.0)) increasing = false;
    if (i > 0 && !(c.targets.t_grid[i] > c.targets.t_grid[i - 1])) increasing = false;
  }
  k.require(increasing, "targets.t_grid must be positive and strictly increasing");
  k.require(c.targets.R > 0.0, "targets.R must be > 0");
  k.require(c.targets.eps > 0.0 && c.targets.eps < 1.0, "targets.eps must lie in (0, 1)");
  k.require(c.targets.shape_time > 0.0, "targets.shape_time must be > 0");
  k.require(c.targets.hitting_horizon > 0.0, "targets.hitting_horizon must be > 0");

  k.require(c.radial.r0 > 0.0, "radial.r0 must be > 0");
  k.require(c.radial.horizon > 0.0, "radial.horizon must be > 0");
  k.require(c.radial.dt > 0.0, "radial.dt must be > 0");
  k.require(c.radial.samples >= 1, "radial.samples must be ≥ 1");
  k.require(c.radial.seeds >= 1, "radial.seeds must be ≥ 1");
  bool r0_ok = !c.radial.r0_grid.empty();
  for (double r : c.radial.r0_grid) r0_ok = r0_ok && r > 0.0;
  k.require(r0_ok, "radial.r0_grid must be nonempty with positive entries");
  k.require(c.radial.submartingale_replicas >= 0, "radial.submartingale_replicas must be ≥ 0");

  k.require(c.control.n >= 1, "control.n must be ≥ 1");
  k.require(c.control.grid_size >= 1, "control.grid_size must be ≥ 1");
  k.require(c.control.dt_divisor >= 100.0, "control.dt_divisor must be ≥ 100");

  k.require(c.split.t_total >= 0.0, "split.t_total must be ≥ 0");
  bool t1_ok = !c.split.t1.empty();
  for (double t : c.split.t1) t1_ok = t1_ok && t >= 0.0 && t <= c.split.t_total;
  k.require(t1_ok, "split.t1 must be nonempty with entries in [0, t_total]");
  k.require(c.split.eta > 0.0, "split.eta must be > 0");
  k.require(c.split.separation >= 0.0, "split.separation must be ≥ 0");
  k.require(c.split.replicas >= 1, "split.replicas must be ≥ 1");

  k.require(c.verify.eigen_points >= 1, "verify.eigen_points must be ≥ 1");
  k.require(c.verify.hitting_replicas >= 32, "verify.hitting_replicas must be ≥ 32");
  k.require(c.verify.shape_replicas >= 1, "verify.shape_replicas must be ≥ 1");
  k.require(c.verify.robust_replicas >= 32, "verify.robust_replicas must be ≥ 32");
  k.require(c.verify.robust_R > 0.0, "verify.robust_R must be > 0");
  k.require(c.verify.split_replicas >= 1, "verify.split_replicas must be ≥ 1");
  k.require(c.verify.submartingale_replicas >= 1, "verify.submartingale_replicas must be ≥ 1");
  k.require(c.verify.radial_samples >= 1, "verify.radial_samples must be ≥ 1");

  k.require(!c.output.dir.empty(), "output.dir must be nonempty");
}

json pair_json(const std::array<double, 2>& p) { return json::array({p[0], p[1]}); }

json to_json(const ExperimentConfig& c) {
  json vertices = json::array();
  for (const auto& v : c.curve.vertices) vertices.push_back(pair_json(v));
  return json{
      {"family",
       {{"kind", c.family.kind},
        {"length_scale", c.family.length_scale},
        {"mix_weight", c.family.mix_weight},
        {"dimension", c.family.dimension}}},
      {"scheme",
       {{"dt", c.scheme.dt},
        {"jitter", c.scheme.jitter},
        {"factorization", c.scheme.factorization},
        {"sampler", c.scheme.sampler},
        {"dense_limit", c.scheme.dense_limit},
        {"spectral_modes", c.scheme.spectral_modes}}},
      {"curve",
       {{"kind", c.curve.kind},
        {"a", pair_json(c.curve.a)},
        {"b", pair_json(c.curve.b)},
        {"center", pair_json(c.curve.center)},
        {"radius", c.curve.radius},
        {"vertices", vertices},
        {"closed", c.curve.closed},
        {"refine_threshold", c.curve.refine_threshold},
        {"max_points", c.curve.max_points}}},
      {"horizon", c.horizon},
      {"replicas", c.replicas},
      {"master_seed", c.master_seed},
      {"snapshot_stride", c.snapshot_stride},
      {"grid", {{"cell_size", c.grid.cell_size}, {"extent", c.grid.extent}}},
      {"prune",
       {{"depth", c.prune.depth},
        {"max_per_cell", c.prune.max_per_cell},
        {"cap_depth", c.prune.cap_depth},
        {"mode", c.prune.mode},
        {"interval", c.prune.interval}}},
      {"targets",
       {{"directions", c.targets.directions},
        {"t_grid", c.targets.t_grid},
        {"R", c.targets.R},
        {"eps", c.targets.eps},
        {"shape_time", c.targets.shape_time},
        {"hitting_horizon", c.targets.hitting_horizon}}},
      {"radial",
       {{"r0", c.radial.r0},
        {"horizon", c.radial.horizon},
        {"dt", c.radial.dt},
        {"samples", c.radial.samples},
        {"seeds", c.radial.seeds},
        {"r0_grid", c.radial.r0_grid},
        {"submartingale_replicas", c.radial.submartingale_replicas}}},
      {"control",
       {{"n", c.control.n},
        {"grid_size", c.control.grid_size},
        {"dt_divisor", c.control.dt_divisor},
        {"q", pair_json(c.control.q)}}},
      {"split",
       {{"t_total", c.split.t_total},
        {"t1", c.split.t1},
        {"eta", c.split.eta},
        {"separation", c.split.separation},
        {"replicas", c.split.replicas}}},
      {"verify",
       {{"eigen_points", c.verify.eigen_points},
        {"hitting_replicas", c.verify.hitting_replicas},
        {"shape_replicas", c.verify.shape_replicas},
        {"robust_replicas", c.verify.robust_replicas},
        {"robust_R", c.verify.robust_R},
        {"split_replicas", c.verify.split_replicas},
        {"submartingale_replicas", c.verify.submartingale_replicas},
        {"radial_samples", c.verify.radial_samples}}},
      {"output", {{"dir", c.output.dir}}},
  };
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports a byte offset; translate it to line and column.
    std::size_t line = 1, col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError({"syntax error at line " + std::to_string(line) + ", column " +
                       std::to_string(col) + ": " + e.what()});
  }
  std::vector<std::string> issues;
  Reader r(issues);
  ExperimentConfig c;
  if (r.object(doc, "", {"family", "scheme", "curve", "horizon", "replicas", "master_seed",
                         "snapshot_stride", "grid", "prune", "targets", "radial", "control",
                         "split", "verify", "output"})) {
    if (doc.contains("family")) read(r, doc["family"], c.family);
    if (doc.contains("scheme")) read(r, doc["scheme"], c.scheme);
    if (doc.contains("curve")) read(r, doc["curve"], c.curve);
    r.number(doc, "horizon", "", c.horizon);
    r.integer(doc, "replicas", "", c.replicas);
    r.integer(doc, "master_seed", "", c.master_seed);
    r.integer(doc, "snapshot_stride", "", c.snapshot_stride);
    if (doc.contains("grid")) read(r, doc["grid"], c.grid);
    if (doc.contains("prune")) read(r, doc["prune"], c.prune);
    if (doc.contains("targets")) read(r, doc["targets"], c.targets);
    if (doc.contains("radial")) read(r, doc["radial"], c.radial);
    if (doc.contains("control")) read(r, doc["control"], c.control);
    if (doc.contains("split")) read(r, doc["split"], c.split);
    if (doc.contains("verify")) read(r, doc["verify"], c.verify);
    if (doc.contains("output")) read(r, doc["output"], c.output);
    validate(c, issues);
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"cannot read config file " + path});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& config, int indent) {
  return to_json(config).dump(indent);
}

std::string config_digest(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_config(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

CorrelationFamily to_family(const ExperimentConfig& config) {
  CorrelationFamily f;
  f.kind = family_kind_from_string(config.family.kind);
  f.length_scale = config.family.length_scale;
  f.mix_weight = config.family.mix_weight;
  f.dimension = config.family.dimension;
  f.validate();
  return f;
}

StepScheme to_scheme(const ExperimentConfig& config) {
  StepScheme s;
  s.dt = config.scheme.dt;
  s.jitter = config.scheme.jitter;
  s.factorization = factorization_from_string(config.scheme.factorization);
  s.sampler = sampler_from_string(config.scheme.sampler);
  s.dense_limit = config.scheme.dense_limit;
  s.spectral_modes = config.scheme.spectral_modes;
  return s;
}

CurveState to_curve(const ExperimentConfig& config) {
  const CurveConfig& c = config.curve;
  CurveState curve;
  if (c.kind == "segment") {
    curve = make_segment(Vec2(c.a[0], c.a[1]), Vec2(c.b[0], c.b[1]), c.refine_threshold);
  } else if (c.kind == "circle") {
    curve = make_circle(Vec2(c.center[0], c.center[1]), c.radius, c.refine_threshold);
  } else {
    Points v(2, static_cast<Eigen::Index>(c.vertices.size()));
    for (std::size_t i = 0; i < c.vertices.size(); ++i) {
      v(0, static_cast<Eigen::Index>(i)) = c.vertices[i][0];
      v(1, static_cast<Eigen::Index>(i)) = c.vertices[i][1];
    }
    curve = make_polyline(v, c.closed, c.refine_threshold);
  }
  curve.max_points = static_cast<std::size_t>(c.max_points);
  return curve;
}

ShapeRunOptions to_shape_options(const ExperimentConfig& config) {
  ShapeRunOptions o;
  o.scheme = to_scheme(config);
  o.horizon = config.targets.hitting_horizon;
  o.curve.log_insertions = false;
  o.curve.prune.depth = config.prune.depth;
  o.curve.prune.max_per_cell = config.prune.max_per_cell;
  o.curve.prune.cap_depth = config.prune.cap_depth;
  o.curve.prune.mode =
      config.prune.mode == "exterior" ? PruneMode::Exterior : PruneMode::AnyUncovered;
  o.curve.prune.interval = config.prune.interval;
  o.curve.prune.cell_size = config.grid.cell_size;
  return o;
}

int snapshot_stride(const ExperimentConfig& config) {
  if (config.snapshot_stride > 0) return config.snapshot_stride;
  const long long steps = step_count(config.horizon, config.scheme.dt);
  return static_cast<int>(std::max<long long>(1, (steps + 199) / 200));
}

}  // namespace ibf
