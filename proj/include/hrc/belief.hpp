#pragma once

// Grid beliefs over the human's following preference and error-proneness,
// updated from a bounded window of classified human actions.

#include <Eigen/Core>
#include <boost/math/distributions/skew_normal.hpp>

#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <vector>

#include "hrc/error.hpp"

namespace hrc {

inline constexpr int kGridPoints = 11;

template <class Scalar>
using GridVector = Eigen::Matrix<Scalar, kGridPoints, 1>;
template <class Scalar>
using GridMatrix = Eigen::Matrix<Scalar, kGridPoints, kGridPoints, Eigen::RowMajor>;

/// W = (0, 0.1, ..., 1). Entries are i/10 so every point is the correctly
/// rounded decimal.
template <class Scalar = double>
GridVector<Scalar> preference_grid() {
  GridVector<Scalar> w;
  for (int i = 0; i < kGridPoints; ++i) w(i) = Scalar(i) / Scalar(kGridPoints - 1);
  return w;
}

enum class BeliefKind { Following, Error };

template <class Scalar = double>
struct BeliefGrid {
  BeliefKind kind = BeliefKind::Following;
  GridVector<Scalar> probs = GridVector<Scalar>::Constant(Scalar(1) / kGridPoints);

  friend bool operator==(const BeliefGrid& a, const BeliefGrid& b) {
    return a.kind == b.kind && a.probs == b.probs;
  }
};

using Belief = BeliefGrid<double>;

/// F1 = assigned a subtask to the robot (H2), F2 = performed a robot
/// assignment (H4), F3 = rejected a robot assignment (H6).
enum class FollowingClass { F1, F2, F3 };
/// M1 = wrong colour placed/assigned, M2 = correct colour, both only for
/// subtasks the robot did not assign.
enum class ErrorClass { M1, M2 };

/// Last-k window of classified actions (bounded-memory adaptation).
template <class Class>
class ActionHistory {
 public:
  explicit ActionHistory(std::size_t capacity = 3) : capacity_(capacity) {}

  void push(Class c) {
    if (capacity_ == 0) return;
    if (entries_.size() == capacity_) entries_.pop_front();
    entries_.push_back(c);
  }

  int count(Class c) const {
    int n = 0;
    for (Class e : entries_) n += (e == c);
    return n;
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<Class>& entries() const { return entries_; }

  friend bool operator==(const ActionHistory&, const ActionHistory&) = default;

 private:
  std::size_t capacity_;
  std::deque<Class> entries_;
};

struct EstimatorParams {
  double alpha_weight = 2.0;  // extra weight of explicit assignments (F1)
  double sigma = 0.15;        // skew-normal scale of the error transition
  double beta_wrong = 4.0;    // skewness after an erroneous action
  double beta_correct = -4.0; // skewness after a correct action
  double prior_p_following = 0.7;
  double prior_p_error = 0.1;
  std::size_t memory = 3;

  void validate() const {
    if (!(alpha_weight > 1.0)) throw ConfigError("alpha_weight must exceed 1");
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    if (!(prior_p_following > 0.0 && prior_p_following < 1.0) ||
        !(prior_p_error > 0.0 && prior_p_error < 1.0)) {
      throw ConfigError("binomial prior parameters must lie in (0, 1)");
    }
  }
};

namespace detail {

template <class Scalar>
Scalar binomial_pmf(int n, int k, Scalar p) {
  Scalar choose = 1;
  for (int i = 1; i <= k; ++i) choose = choose * Scalar(n - k + i) / Scalar(i);
  using std::pow;
  return choose * pow(p, Scalar(k)) * pow(Scalar(1) - p, Scalar(n - k));
}

template <class Scalar>
GridVector<Scalar> normalized_or(const GridVector<Scalar>& v, const GridVector<Scalar>& fallback) {
  const Scalar total = v.sum();
  if (!(total > Scalar(0)) || !std::isfinite(static_cast<double>(total))) return fallback;
  return v / total;
}

}  // namespace detail

/// Binomial(10, p) prior over the grid; p = 0.7 for following, 0.1 for error by default.
template <class Scalar = double>
BeliefGrid<Scalar> init_belief(BeliefKind kind, const EstimatorParams& params) {
  const Scalar p = Scalar(kind == BeliefKind::Following ? params.prior_p_following
                                                        : params.prior_p_error);
  BeliefGrid<Scalar> b;
  b.kind = kind;
  for (int i = 0; i < kGridPoints; ++i) b.probs(i) = detail::binomial_pmf(kGridPoints - 1, i, p);
  b.probs /= b.probs.sum();
  return b;
}

template <class Scalar>
Scalar expected_value(const BeliefGrid<Scalar>& belief) {
  return preference_grid<Scalar>().dot(belief.probs);
}

/// Following-preference update. The transition is the identity (preference
/// is taken as fixed), so the posterior is likelihood times prior. Compliance
/// (F1, F2) has likelihood proportional to y, rejection (F3) to 1 - y.
/// A zero normaliser or an all-zero posterior leaves the belief unchanged.
template <class Scalar>
BeliefGrid<Scalar> update_following(const BeliefGrid<Scalar>& belief,
                                    const ActionHistory<FollowingClass>& history,
                                    FollowingClass observed, const EstimatorParams& params) {
  const Scalar f1 = history.count(FollowingClass::F1);
  const Scalar f2 = history.count(FollowingClass::F2);
  const Scalar f3 = history.count(FollowingClass::F3);
  const Scalar alpha = Scalar(params.alpha_weight);
  const Scalar denom = alpha * f1 + f2 + f3;
  if (!(denom > Scalar(0))) return belief;

  const GridVector<Scalar> w = preference_grid<Scalar>();
  GridVector<Scalar> likelihood;
  if (observed == FollowingClass::F3) {
    likelihood = (f3 / denom) * (GridVector<Scalar>::Ones() - w);
  } else {
    likelihood = ((alpha * f1 + f2) / denom) * w;
  }
  BeliefGrid<Scalar> out = belief;
  out.probs = detail::normalized_or<Scalar>(likelihood.cwiseProduct(belief.probs), belief.probs);
  return out;
}

/// Row-stochastic T_y for one error class: entry (i, j) is the probability of
/// moving from w_i to w_j. After a wrong action the row for w_i is a
/// skew-normal located at the next grid value above, binned on [w_j, w_j+1);
/// after a correct one it is located at the next value below, binned on
/// [w_j-1, w_j). Tail mass outside [0, 1] goes to the boundary cells. The
/// saturated rows (w=1 after M1, w=0 after M2) are identity rows.
template <class Scalar = double>
GridMatrix<Scalar> error_transition_matrix(ErrorClass cls, const EstimatorParams& params) {
  const GridVector<Scalar> w = preference_grid<Scalar>();
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  const int last = kGridPoints - 1;
  GridMatrix<Scalar> t = GridMatrix<Scalar>::Zero();

  for (int i = 0; i < kGridPoints; ++i) {
    const bool wrong = cls == ErrorClass::M1;
    if ((wrong && i == last) || (!wrong && i == 0)) {
      t(i, i) = 1;
      continue;
    }
    const Scalar location = wrong ? w(i + 1) : w(i - 1);
    boost::math::skew_normal_distribution<Scalar> dist(
        location, Scalar(params.sigma), Scalar(wrong ? params.beta_wrong : params.beta_correct));
    auto cdf = [&](Scalar x) -> Scalar {
      if (x == -inf) return Scalar(0);
      if (x == inf) return Scalar(1);
      return boost::math::cdf(dist, x);
    };
    for (int j = 0; j < kGridPoints; ++j) {
      Scalar lo, hi;
      if (wrong) {
        lo = j == 0 ? -inf : w(j);
        hi = j == last ? inf : w(j + 1);
      } else {
        lo = j == 0 ? -inf : w(j - 1);
        hi = j == 0 ? w(0) : (j == last ? inf : w(j));
      }
      using std::max;
      t(i, j) = max(Scalar(0), cdf(hi) - cdf(lo));
    }
    t.row(i) /= t.row(i).sum();
  }
  return t;
}

/// Error-proneness update: likelihood (m1/(m1+m2))*y after a wrong action,
/// (m2/(m1+m2))*(1-y) after a correct one, then the skew-normal transition.
template <class Scalar>
BeliefGrid<Scalar> update_error(const BeliefGrid<Scalar>& belief,
                                const ActionHistory<ErrorClass>& history, ErrorClass observed,
                                const EstimatorParams& params) {
  const Scalar m1 = history.count(ErrorClass::M1);
  const Scalar m2 = history.count(ErrorClass::M2);
  if (!(m1 + m2 > Scalar(0))) return belief;

  const GridVector<Scalar> w = preference_grid<Scalar>();
  GridVector<Scalar> likelihood;
  if (observed == ErrorClass::M1) {
    likelihood = (m1 / (m1 + m2)) * w;
  } else {
    likelihood = (m2 / (m1 + m2)) * (GridVector<Scalar>::Ones() - w);
  }
  const GridVector<Scalar> weighted = likelihood.cwiseProduct(belief.probs);
  if (!(weighted.sum() > Scalar(0))) return belief;

  const GridMatrix<Scalar> t = error_transition_matrix<Scalar>(observed, params);
  BeliefGrid<Scalar> out = belief;
  out.probs = detail::normalized_or<Scalar>(t.transpose() * weighted, belief.probs);
  return out;
}

}  // namespace hrc
