// Copyright 2026 The fdbreak Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fdbreak/sampler.h"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <thread>

#include "fdbreak/diagnostics.h"
#include "fdbreak/models.h"

namespace fdbreak {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

// Maps the free coordinates onto a full parameter vector.
class FreeParameterMap {
 public:
  FreeParameterMap(std::size_t n_params, std::span<const FixedParameter> fixed)
      : full_(n_params, 0.0) {
    std::vector<bool> is_fixed(n_params, false);
    for (const auto& f : fixed) {
      if (f.index >= n_params) throw ValidationError("fixed parameter index out of range");
      if (is_fixed[f.index]) throw ValidationError("parameter fixed twice");
      is_fixed[f.index] = true;
      full_[f.index] = f.value;
    }
    for (std::size_t i = 0; i < n_params; ++i) {
      if (!is_fixed[i]) free_.push_back(i);
    }
    if (free_.empty()) throw ValidationError("no free parameters to sample");
  }

  std::span<const double> expand(std::span<const double> theta) {
    for (std::size_t k = 0; k < free_.size(); ++k) full_[free_[k]] = theta[k];
    return full_;
  }
  const std::vector<std::size_t>& free_indices() const { return free_; }

 private:
  std::vector<double> full_;
  std::vector<std::size_t> free_;
};

// Logistic curve: for a fixed lambda the residual sum of squares is a
// quadratic form in (s_min, s_free) whose coefficients are cached.
class LgfTarget final : public LogDensity {
 public:
  LgfTarget(std::span<const double> x, std::span<const double> y,
            const PriorSpec& prior, const BreakpointBounds& bounds,
            double exponent_scale, std::span<const FixedParameter> fixed)
      : x_(x.begin(), x.end()),
        y_(y.begin(), y.end()),
        prior_(prior),
        bounds_(bounds),
        exponent_scale_(exponent_scale),
        map_(4, fixed) {
    for (double v : y_) sum_yy_ += static_cast<long double>(v) * v;
  }

  double operator()(std::span<const double> theta) override {
    const auto full = map_.expand(theta);
    const LgfParams p{full[0], full[1], full[2], full[3], exponent_scale_};
    const double lp = log_prior(p, prior_, bounds_);
    if (lp == kNegInf || !std::isfinite(lp)) return kNegInf;
    const Sums& s = sums_for(p.lambda);
    const long double a = p.s_min;
    const long double b = p.s_free;
    long double ss = sum_yy_ - 2 * a * s.yh - 2 * b * s.yg + a * a * s.hh +
                     2 * a * b * s.hg + b * b * s.gg;
    if (ss < 0) ss = 0;
    const double n = static_cast<double>(x_.size());
    const double ll = -n * kHalfLog2Pi - n * std::log(p.sigma) -
                      static_cast<double>(ss) / (2.0 * p.sigma * p.sigma);
    return lp + ll;
  }

 private:
  struct Sums {
    double lambda = std::numeric_limits<double>::quiet_NaN();
    long double yh = 0, yg = 0, hh = 0, hg = 0, gg = 0;
  };

  const Sums& sums_for(double lambda) {
    for (const auto& c : cache_) {
      if (c.lambda == lambda) return c;
    }
    Sums& s = cache_[next_slot_];
    next_slot_ = (next_slot_ + 1) % cache_.size();
    s = Sums{};
    s.lambda = lambda;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      // g = 1 / (1 + e^z), h = 1 - g, both without cancellation.
      const double z = (x_[i] - lambda) / exponent_scale_;
      const double e = std::exp(-std::abs(z));
      const double inv = 1.0 / (1.0 + e);
      const long double g = z > 0 ? e * inv : inv;
      const long double h = z > 0 ? inv : e * inv;
      const long double yi = y_[i];
      s.yh += yi * h;
      s.yg += yi * g;
      s.hh += h * h;
      s.hg += h * g;
      s.gg += g * g;
    }
    return s;
  }

  std::vector<double> x_;
  std::vector<double> y_;
  PriorSpec prior_;
  BreakpointBounds bounds_;
  double exponent_scale_;
  FreeParameterMap map_;
  long double sum_yy_ = 0;
  std::array<Sums, 2> cache_{};
  std::size_t next_slot_ = 0;
};

// Two-regime lines: prefix sums over occupancy-sorted data give each regime's
// residual sum of squares in O(log n).
class TwoRegimeTarget final : public LogDensity {
 public:
  TwoRegimeTarget(std::span<const double> x, std::span<const double> y,
                  const PriorSpec& prior, const BreakpointBounds& bounds,
                  std::span<const FixedParameter> fixed)
      : prior_(prior), bounds_(bounds), map_(7, fixed) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    sorted_x_.reserve(x.size());
    prefix_.resize(x.size() + 1);
    for (std::size_t k = 0; k < order.size(); ++k) {
      const long double xi = x[order[k]];
      const long double yi = y[order[k]];
      sorted_x_.push_back(x[order[k]]);
      Moments m = prefix_[k];
      m.sx += xi;
      m.sy += yi;
      m.sxx += xi * xi;
      m.sxy += xi * yi;
      m.syy += yi * yi;
      prefix_[k + 1] = m;
    }
    // The move needs every coefficient and lambda free.
    const auto& free = map_.free_indices();
    collapsible_ = true;
    for (std::size_t i = 0; i < position_.size(); ++i) {
      const auto it = std::find(free.begin(), free.end(), i);
      if (it == free.end()) {
        collapsible_ = false;
        break;
      }
      position_[i] = static_cast<std::size_t>(it - free.begin());
    }
    for (std::size_t r = 0; r < 2; ++r) {
      const auto it = std::find(free.begin(), free.end(), 5 + r);
      sigma_free_[r] = it != free.end();
      if (sigma_free_[r]) sigma_position_[r] = static_cast<std::size_t>(it - free.begin());
    }
    if (!x.empty()) {
      const Moments& all = prefix_.back();
      const long double n = static_cast<long double>(x.size());
      pooled_sd_ = std::sqrt(std::max(static_cast<double>(all.syy / n - (all.sy / n) * (all.sy / n)), 1e-6));
    }
  }

  double operator()(std::span<const double> theta) override {
    const auto full = map_.expand(theta);
    const TwoRegimeParams p{full[0], full[1], full[2], full[3],
                            full[4], full[5], full[6]};
    const double lp = log_prior(p, prior_, bounds_);
    if (lp == kNegInf || !std::isfinite(lp)) return kNegInf;
    const std::size_t k = static_cast<std::size_t>(
        std::upper_bound(sorted_x_.begin(), sorted_x_.end(), p.lambda) -
        sorted_x_.begin());
    const std::size_t n = sorted_x_.size();
    const Moments& below = prefix_[k];
    const Moments above = prefix_[n] - below;
    const double ll =
        -static_cast<double>(n) * kHalfLog2Pi +
        regime_loglik(below, k, p.beta10, p.beta11, p.sigma1) +
        regime_loglik(above, n - k, p.beta20, p.beta21, p.sigma2);
    return lp + ll;
  }

  // Independence move on (lambda, betas, sigmas): lambda is drawn uniformly
  // over the bounds, each free noise scale from a log-normal centred on the
  // least-squares residual scale of its regime, and the four coefficients
  // from their exact Gaussian conditional. The coefficient terms cancel in
  // the acceptance ratio. This lets chains cross between separated
  // breakpoint modes, which random-walk moves alone rarely do.
  bool global_move(std::vector<double>& theta, std::mt19937_64& rng) override {
    if (!collapsible_) return false;
    const auto full = map_.expand(theta);
    const double lambda = full[4];
    const std::array<double, 2> sigma = {full[5], full[6]};
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    const double lambda_new = bounds_.low + (bounds_.high - bounds_.low) * uniform(rng);
    const auto old_split = split(lambda);
    const auto new_split = split(lambda_new);
    std::array<double, 2> sigma_new = sigma;
    double log_q_ratio = 0.0;  // log g(old | old lambda) - log g(new | new lambda)
    for (std::size_t r = 0; r < 2; ++r) {
      if (!sigma_free_[r]) continue;
      const auto g_new = scale_proposal(new_split, r);
      const auto g_old = scale_proposal(old_split, r);
      sigma_new[r] = std::exp(g_new.mean + g_new.sd * normal(rng));
      log_q_ratio += g_old.log_density(sigma[r]) - g_new.log_density(sigma_new[r]);
    }
    const double log_u = std::log(uniform(rng));
    const double log_ratio = collapsed_log_density(new_split, lambda_new, sigma_new) -
                             collapsed_log_density(old_split, lambda, sigma) + log_q_ratio;
    if (!(log_u < log_ratio)) return false;

    const auto b1 = draw_line(new_split.below, new_split.k, sigma_new[0], normal, rng);
    const auto b2 = draw_line(new_split.above, sorted_x_.size() - new_split.k, sigma_new[1],
                              normal, rng);
    const std::array<double, 5> values = {b1[0], b1[1], b2[0], b2[1], lambda_new};
    for (std::size_t i = 0; i < values.size(); ++i) theta[position_[i]] = values[i];
    for (std::size_t r = 0; r < 2; ++r) {
      if (sigma_free_[r]) theta[sigma_position_[r]] = sigma_new[r];
    }
    return true;
  }

 private:
  struct Moments {
    long double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    Moments operator-(const Moments& o) const {
      return {sx - o.sx, sy - o.sy, sxx - o.sxx, sxy - o.sxy, syy - o.syy};
    }
  };

  static double regime_loglik(const Moments& m, std::size_t count, double a,
                              double b, double sigma) {
    if (count == 0) return 0.0;
    const long double la = a;
    const long double lb = b;
    long double ss = m.syy - 2 * la * m.sy - 2 * lb * m.sxy +
                     static_cast<long double>(count) * la * la +
                     2 * la * lb * m.sx + lb * lb * m.sxx;
    if (ss < 0) ss = 0;
    return -static_cast<double>(count) * std::log(sigma) -
           static_cast<double>(ss) / (2.0 * sigma * sigma);
  }

  struct Split {
    Moments below;
    Moments above;
    std::size_t k = 0;
  };

  Split split(double lambda) const {
    const std::size_t k = static_cast<std::size_t>(
        std::upper_bound(sorted_x_.begin(), sorted_x_.end(), lambda) - sorted_x_.begin());
    return {prefix_[k], prefix_.back() - prefix_[k], k};
  }

  // Posterior precision A = X'X / s^2 + I / tau^2 and b = X'y / s^2 for one
  // regime's line under the N(0, tau^2) coefficient prior.
  struct LinePosterior {
    long double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
  };

  LinePosterior line_posterior(const Moments& m, std::size_t count, double sigma) const {
    const long double s2 = static_cast<long double>(sigma) * sigma;
    const long double t2 = static_cast<long double>(prior_.coefficient_scale) *
                           prior_.coefficient_scale;
    return {static_cast<long double>(count) / s2 + 1 / t2, m.sx / s2, m.sxx / s2 + 1 / t2,
            m.sy / s2, m.sxy / s2};
  }

  // log of the regime likelihood integrated over its two coefficients.
  double regime_marginal(const Moments& m, std::size_t count, double sigma) const {
    if (count == 0) return 0.0;
    const LinePosterior p = line_posterior(m, count, sigma);
    const long double t2 = static_cast<long double>(prior_.coefficient_scale) *
                           prior_.coefficient_scale;
    const long double det = p.a11 * p.a22 - p.a12 * p.a12;
    const long double quad =
        (p.a22 * p.b1 * p.b1 - 2 * p.a12 * p.b1 * p.b2 + p.a11 * p.b2 * p.b2) / det;
    const long double s2 = static_cast<long double>(sigma) * sigma;
    return static_cast<double>(-0.5L * static_cast<long double>(count) * std::log(s2) -
                               0.5L * std::log(t2 * t2 * det) - 0.5L * (m.syy / s2 - quad));
  }

  // log p(lambda, sigmas | y) up to a constant, with the coefficients
  // integrated out.
  double collapsed_log_density(const Split& s, double lambda,
                               const std::array<double, 2>& sigma) const {
    const double lp =
        log_prior(TwoRegimeParams{0, 0, 0, 0, lambda, sigma[0], sigma[1]}, prior_, bounds_);
    if (lp == kNegInf) return kNegInf;
    return lp + regime_marginal(s.below, s.k, sigma[0]) +
           regime_marginal(s.above, sorted_x_.size() - s.k, sigma[1]);
  }

  struct LogNormal {
    double mean = 0.0;
    double sd = 1.0;
    // Density of sigma itself, not of log(sigma).
    double log_density(double v) const {
      const double u = (std::log(v) - mean) / sd;
      return -kHalfLog2Pi - std::log(sd) - 0.5 * u * u - std::log(v);
    }
  };

  // Centred on the regime's least-squares residual scale; its spread is
  // about twice the sampling sd of a log standard deviation.
  LogNormal scale_proposal(const Split& s, std::size_t regime) const {
    const Moments& m = regime == 0 ? s.below : s.above;
    const std::size_t count = regime == 0 ? s.k : sorted_x_.size() - s.k;
    if (count < 3) return {std::log(pooled_sd_), 1.0};
    const long double n = static_cast<long double>(count);
    const long double det = n * m.sxx - m.sx * m.sx;
    long double rss = m.syy - m.sy * m.sy / n;
    if (det > 1e-12L * n * m.sxx) {
      const long double sxy_c = m.sxy - m.sx * m.sy / n;
      const long double sxx_c = m.sxx - m.sx * m.sx / n;
      rss -= sxy_c * sxy_c / sxx_c;
    }
    const double sd_hat = std::sqrt(std::max(static_cast<double>(rss / n), 1e-12));
    return {std::log(sd_hat), std::sqrt(1.0 / static_cast<double>(count - 2))};
  }

  std::array<double, 2> draw_line(const Moments& m, std::size_t count, double sigma,
                                  std::normal_distribution<double>& normal,
                                  std::mt19937_64& rng) const {
    const LinePosterior p = line_posterior(m, count, sigma);
    const long double det = p.a11 * p.a22 - p.a12 * p.a12;
    const long double mean1 = (p.a22 * p.b1 - p.a12 * p.b2) / det;
    const long double mean2 = (p.a11 * p.b2 - p.a12 * p.b1) / det;
    // A = L L'; the draw is mean + L'^{-1} e.
    const long double l11 = std::sqrt(p.a11);
    const long double l21 = p.a12 / l11;
    const long double l22 = std::sqrt(p.a22 - l21 * l21);
    const long double e1 = normal(rng);
    const long double e2 = normal(rng);
    const long double u2 = e2 / l22;
    const long double u1 = (e1 - l21 * u2) / l11;
    return {static_cast<double>(mean1 + u1), static_cast<double>(mean2 + u2)};
  }

  PriorSpec prior_;
  BreakpointBounds bounds_;
  FreeParameterMap map_;
  std::vector<double> sorted_x_;
  std::vector<Moments> prefix_;
  // Positions in theta of beta10, beta11, beta20, beta21 and lambda.
  std::array<std::size_t, 5> position_{};
  std::array<std::size_t, 2> sigma_position_{};
  std::array<bool, 2> sigma_free_{};
  bool collapsible_ = false;
  double pooled_sd_ = 1.0;
};

// Sample covariance of rows [begin, end) of a row-major history.
Eigen::MatrixXd history_covariance(const std::vector<double>& history,
                                   std::size_t d, std::size_t begin,
                                   std::size_t end) {
  const auto rows = static_cast<Eigen::Index>(end - begin);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      block(history.data() + begin * d, rows, static_cast<Eigen::Index>(d));
  const Eigen::RowVectorXd mean = block.colwise().mean();
  const Eigen::MatrixXd centered = block.rowwise() - mean;
  return (centered.transpose() * centered) / static_cast<double>(rows - 1);
}

bool cholesky(const Eigen::MatrixXd& cov, Eigen::MatrixXd& lower) {
  const double jitter_base = cov.trace() / static_cast<double>(cov.rows());
  if (!(jitter_base > 0.0) || !std::isfinite(jitter_base)) return false;
  double jitter = 0.0;
  for (int attempt = 0; attempt < 6; ++attempt) {
    Eigen::MatrixXd m = cov;
    m.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) {
      lower = llt.matrixL();
      return true;
    }
    jitter = jitter == 0.0 ? 1e-12 * jitter_base : jitter * 100.0;
  }
  return false;
}

double natural_of(double z, Transform t) {
  return t == Transform::kLog ? std::exp(z) : z;
}

}  // namespace

std::uint64_t chain_seed(std::uint64_t base_seed, int chain_index) {
  return base_seed ^ static_cast<std::uint64_t>(chain_index);
}

ChainSamples run_chain(LogDensity& target, std::span<const Transform> transforms,
                       const ChainSetup& setup, const SamplerSettings& settings,
                       int chain_index, std::uint64_t base_seed) {
  const std::size_t d = transforms.size();
  if (setup.initial.size() != d || setup.initial_scales.size() != d) {
    throw ValidationError("chain setup does not match the parameter count");
  }
  const std::uint64_t seed = chain_seed(base_seed, chain_index);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  std::vector<double> theta(d);
  auto log_target = [&](const std::vector<double>& z) {
    double jacobian = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      theta[j] = natural_of(z[j], transforms[j]);
      if (transforms[j] == Transform::kLog) jacobian += z[j];
    }
    const double lp = target(theta);
    return std::isnan(lp) ? kNegInf : lp + jacobian;
  };

  std::vector<double> z(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double v = setup.initial[j];
    if (transforms[j] == Transform::kLog) {
      if (!(v > 0.0)) throw ValidationError("initial value of a log-scale parameter must be > 0");
      z[j] = std::log(v);
    } else {
      z[j] = v;
    }
  }
  double current = log_target(z);
  if (!std::isfinite(current)) {
    throw ValidationError("initial point has zero posterior density");
  }

  std::vector<double> log_scale(d);
  for (std::size_t j = 0; j < d; ++j) {
    if (!(setup.initial_scales[j] > 0.0)) throw ValidationError("proposal scales must be > 0");
    log_scale[j] = std::log(setup.initial_scales[j]);
  }

  const auto burn_in = static_cast<std::size_t>(std::max(settings.burn_in, 0));
  const auto draws = static_cast<std::size_t>(settings.draws);
  const std::size_t block_start = burn_in / 2;
  // Joint moves need enough burn-in history for a usable covariance.
  const bool use_block = d > 1 && burn_in >= 40 * (d + 1);
  double log_block_scale = std::log(2.38 / std::sqrt(static_cast<double>(d)));
  Eigen::MatrixXd chol;
  bool block_ready = false;
  std::vector<double> history;
  if (use_block) history.reserve(burn_in * d);

  ChainSamples out;
  out.chain_index = chain_index;
  out.seed = seed;
  out.n_params = d;
  out.draws.reserve(draws * d);
  std::size_t accepted = 0;
  std::size_t proposed = 0;
  std::vector<double> frozen_scales;
  double frozen_block_scale = 0.0;

  std::vector<double> proposal(d);
  Eigen::VectorXd noise(static_cast<Eigen::Index>(d));
  for (std::size_t t = 0; t < burn_in + draws; ++t) {
    const bool adapting = t < burn_in;
    const double gamma = std::pow(static_cast<double>(t) + 1.0, -0.6);

    for (std::size_t j = 0; j < d; ++j) {
      proposal = z;
      proposal[j] += std::exp(log_scale[j]) * normal(rng);
      const double candidate = log_target(proposal);
      const bool accept = candidate > kNegInf &&
                          std::log(uniform(rng)) < candidate - current;
      if (accept) {
        z[j] = proposal[j];
        current = candidate;
      }
      if (adapting) {
        log_scale[j] += gamma * ((accept ? 1.0 : 0.0) - settings.componentwise_target);
      } else {
        ++proposed;
        accepted += accept ? 1 : 0;
      }
    }

    if (block_ready) {
      for (std::size_t j = 0; j < d; ++j) noise[static_cast<Eigen::Index>(j)] = normal(rng);
      const Eigen::VectorXd step = std::exp(log_block_scale) * (chol * noise);
      for (std::size_t j = 0; j < d; ++j) proposal[j] = z[j] + step[static_cast<Eigen::Index>(j)];
      const double candidate = log_target(proposal);
      const bool accept = candidate > kNegInf &&
                          std::log(uniform(rng)) < candidate - current;
      if (accept) {
        z = proposal;
        current = candidate;
      }
      if (adapting) {
        const double g = std::pow(static_cast<double>(t - block_start) + 1.0, -0.6);
        log_block_scale += g * ((accept ? 1.0 : 0.0) - settings.block_target);
      } else {
        ++proposed;
        accepted += accept ? 1 : 0;
      }
    }

    for (std::size_t j = 0; j < d; ++j) theta[j] = natural_of(z[j], transforms[j]);
    if (target.global_move(theta, rng)) {
      for (std::size_t j = 0; j < d; ++j) {
        z[j] = transforms[j] == Transform::kLog ? std::log(theta[j]) : theta[j];
      }
      current = log_target(z);
    }

    if (adapting && use_block) {
      history.insert(history.end(), z.begin(), z.end());
      const std::size_t seen = t + 1;
      const bool refresh = seen >= block_start &&
                           ((seen - block_start) % 100 == 0 || seen == burn_in);
      if (refresh) {
        // The most recent half of the history drops the initial transient.
        const Eigen::MatrixXd cov = history_covariance(history, d, seen / 2, seen);
        Eigen::MatrixXd lower;
        if (cholesky(cov, lower)) {
          chol = std::move(lower);
          block_ready = true;
        }
      }
    }

    if (t + 1 == burn_in) {
      frozen_scales = log_scale;
      frozen_block_scale = log_block_scale;
      history.clear();
      history.shrink_to_fit();
    }

    if (!adapting) {
      if (burn_in > 0 && (log_scale != frozen_scales ||
                          log_block_scale != frozen_block_scale)) {
        ++out.post_burn_in_adaptations;
      }
      for (std::size_t j = 0; j < d; ++j) {
        out.draws.push_back(natural_of(z[j], transforms[j]));
      }
    }
  }
  out.acceptance_rate =
      proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  return out;
}

std::vector<ChainSamples> run_chains_parallel(
    const TargetFactory& make_target, std::span<const Transform> transforms,
    std::span<const ChainSetup> setups, const SamplerSettings& settings,
    std::uint64_t base_seed, unsigned threads) {
  const std::size_t n = setups.size();
  std::vector<ChainSamples> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < n; c = next++) {
      try {
        auto target = make_target();
        results[c] = run_chain(*target, transforms, setups[c], settings,
                               static_cast<int>(c), base_seed);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  const unsigned workers = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(std::max<std::size_t>(n, 1)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

std::unique_ptr<LogDensity> make_model_target(
    ModelKind kind, std::span<const double> occupancy,
    std::span<const double> speed, const PriorSpec& prior,
    const BreakpointBounds& bounds, double lgf_exponent_scale,
    std::span<const FixedParameter> fixed) {
  if (occupancy.size() != speed.size()) {
    throw ValidationError("occupancy and speed spans differ in length");
  }
  if (kind == ModelKind::kLgf) {
    return std::make_unique<LgfTarget>(occupancy, speed, prior, bounds,
                                       lgf_exponent_scale, fixed);
  }
  return std::make_unique<TwoRegimeTarget>(occupancy, speed, prior, bounds, fixed);
}

namespace {

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double rms = 0.0;
  bool ok = false;
};

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  LineFit f;
  const std::size_t n = x.size();
  if (n == 0) return f;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    ss += r * r;
  }
  f.rms = std::sqrt(ss / static_cast<double>(n));
  f.ok = n >= 2 && sxx > 0.0;
  return f;
}

double mean_where(std::span<const double> x, std::span<const double> y,
                  auto&& keep) {
  double s = 0.0;
  std::size_t c = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (keep(x[i])) {
      s += y[i];
      ++c;
    }
  }
  return c == 0 ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(c);
}

std::vector<double> initial_scales(ModelKind kind, std::span<const double> init,
                                   const BreakpointBounds& bounds) {
  const double lambda_scale = 0.02 * (bounds.high - bounds.low);
  if (kind == ModelKind::kLgf) {
    const double s = 0.05 * (std::abs(init[1] - init[0]) + 1.0);
    return {s, s, lambda_scale, 0.1};
  }
  return {0.5, 0.05, 0.5, 0.05, lambda_scale, 0.1, 0.1};
}

}  // namespace

std::vector<double> initial_point(ModelKind kind, std::span<const double> x,
                                  std::span<const double> y,
                                  const BreakpointBounds& bounds, int chain_index,
                                  int n_chains, std::uint64_t base_seed) {
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double q = n_chains <= 1 ? 0.5
                                 : 0.3 + 0.4 * chain_index / static_cast<double>(n_chains - 1);
  std::mt19937_64 rng(chain_seed(base_seed, chain_index) ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double span = bounds.high - bounds.low;

  double lambda = quantile_sorted(sorted, q) + 0.01 * span * normal(rng);
  // Keep the start strictly inside the bounds.
  const double margin = 0.01 * span;
  if (lambda <= bounds.low + margin || lambda >= bounds.high - margin) {
    lambda = bounds.low + q * span;
  }

  if (kind == ModelKind::kLgf) {
    const double lo_cut = quantile_sorted(sorted, 0.15);
    const double hi_cut = quantile_sorted(sorted, 0.85);
    double s_free = mean_where(x, y, [&](double v) { return v <= lo_cut; });
    double s_min = mean_where(x, y, [&](double v) { return v >= hi_cut; });
    const double jitter = 0.02 * (std::abs(s_free - s_min) + 1.0);
    s_free += jitter * normal(rng);
    s_min += jitter * normal(rng);
    double ss = 0.0;
    const LgfParams p{s_min, s_free, lambda, 1.0};
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - lgf_mean(x[i], p);
      ss += r * r;
    }
    const double sigma = std::max(std::sqrt(ss / static_cast<double>(x.size())), 0.05) *
                         std::exp(0.1 * normal(rng));
    return {s_min, s_free, lambda, sigma};
  }

  std::vector<double> x1, y1, x2, y2;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= lambda) {
      x1.push_back(x[i]);
      y1.push_back(y[i]);
    } else {
      x2.push_back(x[i]);
      y2.push_back(y[i]);
    }
  }
  const LineFit pooled = least_squares(x, y);
  LineFit f1 = least_squares(x1, y1);
  LineFit f2 = least_squares(x2, y2);
  if (!f1.ok) f1 = pooled;
  if (!f2.ok) f2 = pooled;
  const double level = 0.02 * (std::abs(pooled.intercept) + 1.0);
  auto jitter_line = [&](LineFit& f) {
    f.intercept += level * normal(rng);
    f.slope += 0.02 * (std::abs(f.slope) + 0.1) * normal(rng);
  };
  jitter_line(f1);
  jitter_line(f2);
  const double s1 = std::max(f1.rms, 0.05) * std::exp(0.1 * normal(rng));
  const double s2 = std::max(f2.rms, 0.05) * std::exp(0.1 * normal(rng));
  return {f1.intercept, f1.slope, f2.intercept, f2.slope, lambda, s1, s2};
}

void summarize_fit(PosteriorFit& fit) {
  const auto names_view = parameter_names(fit.model_kind);
  std::vector<std::string> names(names_view.begin(), names_view.end());
  const double mass = fit.config.credible_mass;

  fit.params.clear();
  for (std::size_t p = 0; p < names.size(); ++p) {
    std::vector<std::vector<double>> columns;
    for (const auto& c : fit.chains) columns.push_back(c.column(p));
    fit.params.push_back(summarize(columns, mass, names[p]));
  }
  fit.diagnostics = diagnose(fit.chains, names, fit.fixed_params, fit.config.rhat_threshold);

  const std::size_t m = fit.chains.size();
  std::vector<std::vector<double>> occ(m), mid(m), lo(m), hi(m), width(m);
  for (std::size_t c = 0; c < m; ++c) {
    const auto& chain = fit.chains[c];
    for (std::size_t i = 0; i < chain.n_draws(); ++i) {
      const Breakpoints b = derive_breakpoints(
          params_from_vector(fit.model_kind, chain.row(i), fit.config.lgf_exponent_scale));
      occ[c].push_back(b.occupancy);
      mid[c].push_back(b.speed_mid());
      lo[c].push_back(b.speed_low);
      hi[c].push_back(b.speed_high);
      width[c].push_back(b.band_width);
    }
  }
  BreakpointReport& r = fit.breakpoints;
  r = BreakpointReport{};
  r.model_kind = fit.model_kind;
  r.occupancy = summarize(occ, mass, "occupancy_breakpoint");
  r.speed = summarize(mid, mass, "speed_breakpoint");
  if (fit.model_kind == ModelKind::kTwoRegime) {
    r.speed_low = summarize(lo, mass, "speed_breakpoint_low");
    r.speed_high = summarize(hi, mass, "speed_breakpoint_high");
    r.band_width = summarize(width, mass, "band_width");
  }
}

PosteriorFit run_chains(ModelKind kind, const DetectorDataset& data,
                        const PriorSpec& prior, const FitConfig& config,
                        const RunOptions& options) {
  config.validate();
  prior.validate();
  data.require_fittable();
  const BreakpointBounds bounds = config.resolve_bounds(data);
  const std::vector<double> x = data.occupancies();
  const std::vector<double> y = data.speeds();
  const std::size_t n_params = parameter_count(kind);

  for (const auto& f : options.fixed) {
    if (f.index < n_params && is_scale_parameter(kind, f.index) && !(f.value > 0.0)) {
      throw ValidationError("fixed noise scale must be > 0");
    }
  }
  const FreeParameterMap map(n_params, options.fixed);
  const auto& free = map.free_indices();

  std::vector<Transform> transforms;
  for (std::size_t i : free) {
    transforms.push_back(is_scale_parameter(kind, i) ? Transform::kLog
                                                     : Transform::kIdentity);
  }

  std::vector<ChainSetup> setups;
  for (int c = 0; c < config.n_chains; ++c) {
    std::vector<double> full =
        initial_point(kind, x, y, bounds, c, config.n_chains, config.seed);
    for (const auto& f : options.fixed) full[f.index] = f.value;
    const std::vector<double> scales = initial_scales(kind, full, bounds);
    ChainSetup s;
    for (std::size_t i : free) {
      s.initial.push_back(full[i]);
      s.initial_scales.push_back(scales[i]);
    }
    setups.push_back(std::move(s));
  }

  const TargetFactory factory = [&] {
    return make_model_target(kind, x, y, prior, bounds, config.lgf_exponent_scale,
                             options.fixed);
  };
  SamplerSettings settings;
  settings.burn_in = config.burn_in;
  settings.draws = config.inference_draws;
  std::vector<ChainSamples> raw =
      run_chains_parallel(factory, transforms, setups, settings, config.seed,
                          options.threads);

  PosteriorFit fit;
  fit.model_kind = kind;
  fit.config = config;
  fit.prior = prior;
  fit.bounds = bounds;
  for (const auto& f : options.fixed) fit.fixed_params.push_back(f.index);
  std::sort(fit.fixed_params.begin(), fit.fixed_params.end());
  fit.dataset_digest = dataset_digest(data);
  fit.n_observations = data.size();

  for (auto& chain : raw) {
    ChainSamples full;
    full.chain_index = chain.chain_index;
    full.seed = chain.seed;
    full.n_params = n_params;
    full.acceptance_rate = chain.acceptance_rate;
    full.post_burn_in_adaptations = chain.post_burn_in_adaptations;
    full.draws.resize(chain.n_draws() * n_params);
    std::vector<double> row(n_params);
    for (const auto& f : options.fixed) row[f.index] = f.value;
    for (std::size_t i = 0; i < chain.n_draws(); ++i) {
      for (std::size_t k = 0; k < free.size(); ++k) row[free[k]] = chain.at(i, k);
      std::copy(row.begin(), row.end(), full.draws.begin() + static_cast<std::ptrdiff_t>(i * n_params));
    }
    fit.chains.push_back(std::move(full));
  }
  summarize_fit(fit);
  return fit;
}

}  // namespace fdbreak
