#include "ibf/flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ibf/parallel.hpp"
#include "spectral_kernel.hpp"

namespace ibf {

std::string to_string(Factorization f) {
  return f == Factorization::CholeskyWithJitter ? "cholesky-with-jitter" : "eigenvalue-clip";
}

std::string to_string(IncrementSampler s) {
  switch (s) {
    case IncrementSampler::Automatic:
      return "automatic";
    case IncrementSampler::Dense:
      return "dense";
    case IncrementSampler::Spectral:
      return "spectral";
  }
  return "unknown";
}

Factorization factorization_from_string(const std::string& name) {
  if (name == "cholesky-with-jitter") return Factorization::CholeskyWithJitter;
  if (name == "eigenvalue-clip") return Factorization::EigenvalueClip;
  throw ParameterError("unknown factorization '" + name + "'");
}

IncrementSampler sampler_from_string(const std::string& name) {
  if (name == "automatic") return IncrementSampler::Automatic;
  if (name == "dense") return IncrementSampler::Dense;
  if (name == "spectral") return IncrementSampler::Spectral;
  throw ParameterError("unknown increment sampler '" + name + "'");
}

bool step_too_coarse(const CorrelationFamily& family, const StepScheme& scheme) {
  return scheme.dt > family.length_scale * family.length_scale / 10.0;
}

namespace {

double solenoidal_weight(const CorrelationFamily& family) {
  switch (family.kind) {
    case FamilyKind::SolenoidalGaussian:
      return 1.0;
    case FamilyKind::PotentialGaussian:
      return 0.0;
    case FamilyKind::Mixture:
      return family.mix_weight;
  }
  return 1.0;
}

Points dense_increment(const CorrelationFamily& family, const Points& pts, double dt,
                       const StepScheme& scheme, RngStream& rng, IncrementInfo& info) {
  const Eigen::Index d = pts.rows();
  const Eigen::Index n = pts.cols();
  const Matrix sigma = block_covariance(family, pts);
  const Matrix l = factor_covariance(sigma, scheme, info);
  Vector z(d * n);
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  const Vector inc = std::sqrt(dt) * (l * z);
  return Eigen::Map<const Points>(inc.data(), d, n);
}

// Random Fourier modes. For either Gaussian family the spectral measure of b
// factorizes into |k| l ~ chi(4), a uniform direction, and a rank-one
// projection onto k-perp (solenoidal) or k (potential), scaled by 2 so that
// b(0) = I. Each mode carries independent Gaussian cos/sin amplitudes, which
// makes the covariance of the superposition exactly dt * b(x - y).
Points spectral_increment(const CorrelationFamily& family, const Points& pts, double dt,
                          int modes, RngStream& rng) {
  const Eigen::Index n = pts.cols();
  const double a = solenoidal_weight(family);
  const double ga = std::sqrt(2.0 * a);
  const double gb = std::sqrt(2.0 * (1.0 - a));
  const double scale = std::sqrt(dt / modes);
  std::vector<double> kx(modes), ky(modes), cx(modes), cy(modes), sx(modes), sy(modes);
  for (int j = 0; j < modes; ++j) {
    double chi2 = 0.0;
    for (int q = 0; q < 4; ++q) {
      const double g = rng.normal();
      chi2 += g * g;
    }
    const double kn = std::sqrt(chi2) / family.length_scale;
    const double th = 6.283185307179586476925 * rng.uniform();
    const double c = std::cos(th), s = std::sin(th);
    kx[j] = kn * c;
    ky[j] = kn * s;
    const double xi1 = rng.normal(), xi2 = rng.normal();
    const double et1 = rng.normal(), et2 = rng.normal();
    // perp = (-s, c), hat = (c, s)
    cx[j] = scale * (-ga * xi1 * s + gb * xi2 * c);
    cy[j] = scale * (ga * xi1 * c + gb * xi2 * s);
    sx[j] = scale * (-ga * et1 * s + gb * et2 * c);
    sy[j] = scale * (ga * et1 * c + gb * et2 * s);
  }
  std::vector<double> x(n), y(n), ux(n, 0.0), uy(n, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] = pts(0, i);
    y[i] = pts(1, i);
  }
  detail::accumulate_modes(static_cast<std::size_t>(n), static_cast<std::size_t>(modes),
                           x.data(), y.data(), kx.data(), ky.data(), cx.data(), cy.data(),
                           sx.data(), sy.data(), ux.data(), uy.data());
  Points out(2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(0, i) = ux[i];
    out(1, i) = uy[i];
  }
  return out;
}

}  // namespace

Matrix factor_covariance(const Matrix& sigma, const StepScheme& scheme, IncrementInfo& info) {
  double jitter = scheme.jitter;
  for (int attempt = 0; attempt < 4; ++attempt) {
    Matrix work = sigma;
    work.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(work);
    if (llt.info() == Eigen::Success) {
      info.jitter_used = jitter;
      info.escalated = attempt > 0;
      return llt.matrixL();
    }
    jitter = jitter > 0.0 ? jitter * 10.0 : 1e-12;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
  const double lo = es.eigenvalues().minCoeff();
  if (scheme.factorization == Factorization::CholeskyWithJitter) {
    std::ostringstream msg;
    msg << "covariance factorization failed after jitter escalation; minimum eigenvalue "
        << lo;
    throw NumericalError(msg.str());
  }
  info.escalated = true;
  info.clipped = true;
  info.jitter_used = jitter;
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

Points sample_increment(const CorrelationFamily& family, const PointCloud& cloud,
                        const StepScheme& scheme, RngStream& rng, IncrementInfo* info) {
  if (cloud.points.cols() == 0) throw PreconditionError("sample_increment: empty cloud");
  IncrementInfo local;
  IncrementInfo& inf = info ? *info : local;
  inf = IncrementInfo{};
  const Eigen::Index n = cloud.points.cols();
  bool spectral = false;
  switch (scheme.sampler) {
    case IncrementSampler::Dense:
      break;
    case IncrementSampler::Spectral:
      spectral = true;
      break;
    case IncrementSampler::Automatic:
      spectral = n > scheme.dense_limit;
      break;
  }
  if (spectral && cloud.points.rows() != 2) spectral = false;
  if (spectral) {
    inf.dense = false;
    return spectral_increment(family, cloud.points, scheme.dt, scheme.spectral_modes, rng);
  }
  return dense_increment(family, cloud.points, scheme.dt, scheme, rng, inf);
}

PointCloud step_points(const CorrelationFamily& family, const PointCloud& cloud,
                       const StepScheme& scheme, RngStream& rng, IncrementInfo* info) {
  PointCloud next = cloud;
  if (scheme.dt == 0.0) return next;
  next.points += sample_increment(family, cloud, scheme, rng, info);
  next.time += scheme.dt;
  return next;
}

double diameter(const Points& points) {
  if (points.cols() < 2) return 0.0;
  if (points.rows() == 2) return diameter_2d(points);
  double best = 0.0;
  for (Eigen::Index i = 0; i < points.cols(); ++i)
    for (Eigen::Index j = i + 1; j < points.cols(); ++j)
      best = std::max(best, (points.col(i) - points.col(j)).squaredNorm());
  return std::sqrt(best);
}

// ----- curves --------------------------------------------------------------

CurveState make_polyline(const Points& vertices, bool closed, double refine_threshold) {
  if (vertices.rows() != 2 || vertices.cols() == 0)
    throw ParameterError("curves need at least one point in R^2");
  if (!(refine_threshold > 0.0)) throw ParameterError("refine_threshold must be positive");
  CurveState c;
  c.cloud.points = vertices;
  c.refine_threshold = refine_threshold;
  c.link.assign(vertices.cols(), 1);
  if (!closed || vertices.cols() < 3) c.link.back() = 0;
  refine_curve(c, false);
  return c;
}

CurveState make_segment(const Vec2& a, const Vec2& b, double refine_threshold) {
  Points v(2, 2);
  v.col(0) = a;
  v.col(1) = b;
  return make_polyline(v, false, refine_threshold);
}

CurveState make_circle(const Vec2& center, double radius, double refine_threshold) {
  if (!(radius > 0.0)) throw ParameterError("circle radius must be positive");
  const double circumference = 6.283185307179586476925 * radius;
  const int n = std::max(8, static_cast<int>(std::ceil(circumference / refine_threshold)));
  Points v(2, n);
  for (int i = 0; i < n; ++i) {
    const double th = 6.283185307179586476925 * i / n;
    v(0, i) = center.x() + radius * std::cos(th);
    v(1, i) = center.y() + radius * std::sin(th);
  }
  return make_polyline(v, true, refine_threshold);
}

bool refine_curve(CurveState& curve, bool log_insertions) {
  const Eigen::Index n = curve.cloud.points.cols();
  if (n < 2) return true;
  const double limit = 2.0 * curve.refine_threshold;
  std::vector<int> pieces(n, 1);
  std::size_t total = static_cast<std::size_t>(n);
  bool complete = true;
  const Points& p = curve.cloud.points;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!curve.link[i]) continue;
    const Eigen::Index j = (i + 1) % n;
    const double len = (p.col(j) - p.col(i)).norm();
    if (!(len > limit)) continue;
    if (!std::isfinite(len)) throw NumericalError("refine_curve: non-finite edge length");
    int m = 1;
    while (len / m > limit && m < (1 << 20)) m *= 2;
    if (total + (m - 1) > curve.max_points) {
      complete = false;
      continue;
    }
    pieces[i] = m;
    total += m - 1;
  }
  if (total == static_cast<std::size_t>(n)) return complete;
  Points out(2, static_cast<Eigen::Index>(total));
  std::vector<std::uint8_t> link(total, 1);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = (i + 1) % n;
    out.col(k) = p.col(i);
    link[k] = curve.link[i];
    ++k;
    for (int s = 1; s < pieces[i]; ++s) {
      const double f = static_cast<double>(s) / pieces[i];
      out.col(k) = (1.0 - f) * p.col(i) + f * p.col(j);
      link[k] = 1;
      if (log_insertions) curve.insertion_log.push_back({curve.cloud.time, static_cast<std::size_t>(i)});
      ++k;
    }
  }
  curve.cloud.points = std::move(out);
  curve.link = std::move(link);
  return complete;
}

CurveSimulator::CurveSimulator(const CorrelationFamily& family, CurveState curve,
                               const StepScheme& scheme, RngStream& rng, CurveOptions options)
    : family_(family), curve_(std::move(curve)), scheme_(scheme), rng_(rng),
      options_(options) {
  family_.validate();
  if (curve_.cloud.points.rows() != 2) throw ParameterError("curves live in R^2");
  if (pruning() || options_.track_coverage) {
    grid_.emplace(Vec2::Zero(), options_.prune.cell_size, 32, 32);
    grid_->accumulate(curve_.cloud.points, curve_.link, curve_.cloud.time);
  }
}

void CurveSimulator::step(double dt) {
  if (dt <= 0.0) return;
  StepScheme s = scheme_;
  s.dt = dt;
  IncrementInfo info;
  PointCloud& cloud = curve_.cloud;
  cloud.points += sample_increment(family_, cloud, s, rng_, &info);
  cloud.time += dt;
  if (!cloud.points.allFinite()) throw NumericalError("curve simulation produced non-finite points");
  if (info.escalated) ++escalations_;
  if (!refine_curve(curve_, options_.log_insertions) && !capped_) {
    capped_ = true;
    capped_time_ = cloud.time;
  }
  ++steps_;
  if (grid_) grid_->accumulate(cloud.points, curve_.link, cloud.time);
  if (pruning() && steps_ % std::max(1, options_.prune.interval) == 0) prune();
}

void CurveSimulator::prune() {
  const PruneOptions& po = options_.prune;
  const Points& p = curve_.cloud.points;
  const Eigen::Index n = p.cols();
  std::vector<std::uint8_t> keep(n, 1);
  std::vector<float> point_depth(n, 0.0f);
  if (po.depth > 0.0 || po.cap_depth > 0.0) {
    const std::vector<float> depth = grid_->depth_map(po.mode == PruneMode::Exterior);
    for (Eigen::Index i = 0; i < n; ++i) {
      point_depth[i] = grid_->depth_at(depth, p.col(i));
      if (po.depth > 0.0) keep[i] = point_depth[i] <= po.depth;
    }
  }
  if (po.max_per_cell > 0) {
    // Scanning in curve order keeps whole runs of arcs that reach a cell
    // first and drops later visitors.
    std::vector<std::uint16_t> count(
        static_cast<std::size_t>(grid_->width()) * grid_->height(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!keep[i] || point_depth[i] <= po.cap_depth) continue;
      const std::size_t cell = grid_->storage_index(p.col(i));
      if (count[cell] >= po.max_per_cell) keep[i] = 0;
      else ++count[cell];
    }
  }
  // Isolated leftovers cannot stretch into curve pieces.
  for (Eigen::Index i = 0; i < n && n > 1; ++i) {
    const Eigen::Index prev = (i + n - 1) % n, next = (i + 1) % n;
    const bool left = curve_.link[prev] && keep[prev];
    const bool right = curve_.link[i] && keep[next];
    if (keep[i] && !left && !right && curve_.link[i] + curve_.link[prev] > 0) keep[i] = 0;
  }
  Eigen::Index kept = 0;
  for (auto k : keep) kept += k;
  if (kept == n || kept == 0) return;
  Points out(2, kept);
  std::vector<std::uint8_t> link(kept);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    out.col(k) = p.col(i);
    link[k] = curve_.link[i] && keep[(i + 1) % n];
    ++k;
  }
  pruned_ += n - kept;
  curve_.cloud.points = std::move(out);
  curve_.link = std::move(link);
}

long long step_count(double horizon, double dt) {
  if (!(horizon > 0.0)) return 0;
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  const double ratio = horizon / dt;
  const long long rounded = std::llround(ratio);
  if (std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio)) return rounded;
  return static_cast<long long>(std::ceil(ratio));
}

Trajectory simulate_curve(const CorrelationFamily& family, const CurveState& curve,
                          double horizon, const StepScheme& scheme, RngStream& rng,
                          int snapshot_stride, CurveOptions options) {
  if (!(horizon >= 0.0)) throw PreconditionError("simulate_curve: horizon must be >= 0");
  const int stride = std::max(1, snapshot_stride);
  Trajectory traj;
  CurveSimulator sim(family, curve, scheme, rng, options);
  const double t0 = curve.cloud.time;
  auto snap = [&] {
    traj.snapshots.push_back({sim.time(), sim.state().cloud.points, sim.state().link});
  };
  snap();
  const long long steps = step_count(horizon, scheme.dt);
  for (long long k = 1; k <= steps; ++k) {
    const double target = k == steps ? t0 + horizon : t0 + k * scheme.dt;
    sim.step(target - sim.time());
    if (k % stride == 0 || k == steps) snap();
  }
  traj.final_state = sim.state();
  traj.capped = sim.capped();
  traj.capped_time = sim.capped_time();
  traj.escalation_steps = sim.escalation_steps();
  if (traj.capped) {
    std::ostringstream msg;
    msg << "refinement capped at max_points=" << curve.max_points << " from t="
        << traj.capped_time;
    traj.warnings.push_back(msg.str());
  }
  if (traj.escalation_steps > 0)
    traj.warnings.push_back("near-coincident points: jitter escalated in " +
                            std::to_string(traj.escalation_steps) + " steps");
  if (step_too_coarse(family, scheme))
    traj.warnings.push_back("dt exceeds length_scale^2/10");
  return traj;
}

// ----- split-time experiment ----------------------------------------------

namespace {

CurveState advance(const CorrelationFamily& family, const CurveState& curve, double t,
                   const StepScheme& scheme, RngStream& rng, const CurveOptions& opts) {
  if (t <= 0.0) return curve;
  CurveOptions o = opts;
  o.log_insertions = false;
  CurveSimulator sim(family, curve, scheme, rng, o);
  const long long steps = step_count(t, scheme.dt);
  const double t0 = curve.cloud.time;
  for (long long k = 1; k <= steps; ++k) {
    const double target = k == steps ? t0 + t : t0 + k * scheme.dt;
    sim.step(target - sim.time());
  }
  return sim.state();
}

}  // namespace

std::vector<SplitEstimate> split_meeting_probability(
    const CorrelationFamily& family, const CurveState& gamma, const CurveState& gamma_bar,
    double t_total, const std::vector<std::pair<double, double>>& splits, double eta,
    int replicas, const SplitOptions& options) {
  if (splits.empty()) throw PreconditionError("split_meeting_probability: no splits");
  if (!(eta > 0.0)) throw PreconditionError("split_meeting_probability: eta must be > 0");
  for (const auto& [t1, t2] : splits)
    if (t1 < 0 || t2 < 0 || std::abs(t1 + t2 - t_total) > 1e-9 * std::max(1.0, t_total))
      throw PreconditionError("split_meeting_probability: splits must sum to t_total");
  std::vector<SplitEstimate> out;
  const std::size_t reps = static_cast<std::size_t>(std::max(0, replicas));
  for (std::size_t s = 0; s < splits.size(); ++s) {
    const auto [t1, t2] = splits[s];
    std::vector<std::uint8_t> met(reps, 0);
    parallel_for(reps, [&](std::size_t r) {
      const std::uint64_t base = 2 * (s * reps + r);
      RngStream rng_a(derive_seed(options.master_seed, base));
      RngStream rng_b(derive_seed(options.master_seed, base + 1));
      const CurveState a = advance(family, gamma, t1, options.scheme, rng_a, options.curve_options);
      const CurveState b =
          advance(family, gamma_bar, t2, options.scheme, rng_b, options.curve_options);
      met[r] = polylines_within(a.view(), b.view(), eta);
    });
    SplitEstimate est;
    est.t1 = t1;
    est.t2 = t2;
    est.replicas = static_cast<int>(reps);
    if (reps > 0) {
      double hits = 0;
      for (auto m : met) hits += m;
      est.probability = hits / static_cast<double>(reps);
      est.standard_error =
          std::sqrt(est.probability * (1.0 - est.probability) / static_cast<double>(reps));
    }
    out.push_back(est);
  }
  return out;
}

}  // namespace ibf
