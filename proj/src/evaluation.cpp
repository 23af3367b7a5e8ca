#include "linecalib/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "linecalib/calibration.hpp"
#include "linecalib/error.hpp"
#include "linecalib/text_io.hpp"

namespace linecalib {

double translation_error(const Extrinsic& est, const Extrinsic& ref) {
  return (est.t - ref.t).norm();
}

double rotation_error(const Extrinsic& est, const Extrinsic& ref) {
  if (est.r == ref.r) return 0.0;  // R R^T is not exactly I in floating point
  return rotation_geodesic(est.rotation(), ref.rotation());
}

CalibrationError compute_error(const Extrinsic& est, const Extrinsic& ref) {
  CalibrationError e;
  const Vec3 d = est.t - ref.t;
  e.dt = d.norm();
  e.dtx = std::abs(d.x());
  e.dty = std::abs(d.y());
  e.dtz = std::abs(d.z());
  if (est.r == ref.r) return e;
  const Mat3 R_est = est.rotation();
  const Mat3 R_ref = ref.rotation();
  e.dtheta = rotation_geodesic(R_est, R_ref);
  const EulerZyx rel = euler_zyx(R_est * R_ref.transpose());
  e.droll = std::abs(rel.roll);
  e.dpitch = std::abs(rel.pitch);
  e.dyaw = std::abs(rel.yaw);
  return e;
}

CalibrationError aggregate(std::span<const CalibrationError> errors) {
  if (errors.empty()) throw Error(ErrorCode::kEmptyList, "aggregate of an empty error list");
  CalibrationError m;
  for (const auto& e : errors) {
    m.dt += e.dt;
    m.dtheta += e.dtheta;
    m.dtx += e.dtx;
    m.dty += e.dty;
    m.dtz += e.dtz;
    m.droll += e.droll;
    m.dpitch += e.dpitch;
    m.dyaw += e.dyaw;
  }
  const double n = static_cast<double>(errors.size());
  for (double* f : {&m.dt, &m.dtheta, &m.dtx, &m.dty, &m.dtz, &m.droll, &m.dpitch, &m.dyaw}) {
    *f /= n;
  }
  return m;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::kEmptyList, "percentile of an empty list");
  if (!(p > 0.0 && p <= 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "percentile must lie in (0, 100]");
  }
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(p / 100.0 * static_cast<double>(values.size()));
  const std::size_t idx = std::max<std::size_t>(1, static_cast<std::size_t>(rank)) - 1;
  return values[std::min(idx, values.size() - 1)];
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double rank_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kDimensionMismatch, "rank correlation sizes differ");
  if (x.empty()) throw Error(ErrorCode::kEmptyList, "rank correlation of empty lists");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::string csv_header() {
  return "id,dt_m,dtheta_deg,dtx_m,dty_m,dtz_m,droll_deg,dpitch_deg,dyaw_deg";
}

std::string csv_row(const std::string& id, const CalibrationError& e) {
  std::string row = id;
  for (double v : {e.dt, rad2deg(e.dtheta), e.dtx, e.dty, e.dtz, rad2deg(e.droll),
                   rad2deg(e.dpitch), rad2deg(e.dyaw)}) {
    row += ',';
    row += format_double(v);
  }
  return row;
}

Extrinsic perturb(const Extrinsic& ref, double max_t, double max_theta, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vec3 dt;
  for (int i = 0; i < 3; ++i) dt(i) = unit(rng) * max_t;
  EulerZyx angles;
  angles.roll = unit(rng) * max_theta;
  angles.pitch = unit(rng) * max_theta;
  angles.yaw = unit(rng) * max_theta;
  return Extrinsic::from_rotation(from_euler_zyx(angles) * ref.rotation(), ref.t + dt);
}

std::vector<SweepTrial> robustness_sweep(std::span<const SweepFrame> frames,
                                         const SweepOptions& options) {
  const std::size_t total = frames.size() * options.trials;
  std::vector<SweepTrial> out(total);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      SweepTrial& trial = out[i];
      trial.frame = i / options.trials;
      trial.trial = i % options.trials;
      trial.seed = options.seed + i;
      const SweepFrame& frame = frames[trial.frame];
      trial.initial = perturb(frame.reference, options.max_t, options.max_theta, trial.seed);
      trial.initial_error = compute_error(trial.initial, frame.reference);
      try {
        if (frame.evaluator == nullptr) throw Error(ErrorCode::kInvalidArgument, "frame has no evaluator");
        RefinementConfig cfg = options.refine;
        cfg.seed = derive_seed(trial.seed, 7);
        trial.refined = refine(trial.initial, *frame.evaluator, cfg).extrinsic;
        trial.refined_error = compute_error(*trial.refined, frame.reference);
      } catch (const Error& e) {
        trial.failure = e.what();
      }
    }
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(total)));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return out;
}

}  // namespace linecalib
