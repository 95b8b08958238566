// Copyright 2026 The dvtts Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dvtts/align.hpp"

#include <limits>

#include "dvtts/errors.hpp"

namespace dvtts {

namespace {

void check_prior(const Tensor& lp, const char* op) {
  if (lp.rank() != 2) throw DimensionError(std::string(op) + ": log prior must be P x F");
  if (lp.cols() < lp.rows()) {
    throw InfeasibleError(std::string(op) + ": " + std::to_string(lp.cols()) + " frames cannot cover " +
                          std::to_string(lp.rows()) + " phonemes");
  }
  ensure_finite(lp, op);
}

AlignmentResult from_assignment(std::vector<int> assignment, std::size_t phonemes, double score) {
  AlignmentResult r;
  r.durations.assign(phonemes, 0);
  for (int p : assignment) ++r.durations[static_cast<std::size_t>(p)];
  r.assignment = std::move(assignment);
  r.log_likelihood = score;
  return r;
}

}  // namespace

AlignmentResult mas(const Tensor& log_prior) {
  check_prior(log_prior, "mas");
  const std::size_t P = log_prior.rows(), F = log_prior.cols();
  constexpr double kNeg = -std::numeric_limits<double>::infinity();
  // s(p, f): best score of frames f..F-1 given frame f sits on phoneme p.
  Tensor s = Tensor::matrix(P, F, kNeg);
  s(P - 1, F - 1) = log_prior(P - 1, F - 1);
  for (std::size_t f = F - 1; f-- > 0;) {
    // Phoneme p is reachable at frame f only if p <= f and P-1-p <= F-1-f.
    const std::size_t lo = f + P > F ? f + P - F : 0;
    const std::size_t hi = std::min(f, P - 1);
    for (std::size_t p = lo; p <= hi; ++p) {
      double best = s(p, f + 1);
      if (p + 1 < P) best = std::max(best, s(p + 1, f + 1));
      s(p, f) = log_prior(p, f) + best;
    }
  }
  // Walk forward, staying on the current phoneme unless advancing is strictly better.
  std::vector<int> assignment(F);
  std::size_t p = 0;
  for (std::size_t f = 0; f < F; ++f) {
    if (f > 0 && p + 1 < P && s(p + 1, f) > s(p, f)) ++p;
    assignment[f] = static_cast<int>(p);
  }
  return from_assignment(std::move(assignment), P, s(0, 0));
}

AlignmentResult brute_force_align(const Tensor& log_prior) {
  check_prior(log_prior, "brute_force_align");
  const std::size_t P = log_prior.rows(), F = log_prior.cols();
  if (P > 6 || F > 10) throw SizeError("brute_force_align: instance too large (P <= 6, F <= 10)");
  std::vector<int> cur(F), best;
  double best_score = -std::numeric_limits<double>::infinity();
  // Among equal scores the lexicographically smallest assignment stays longest.
  auto prefer = [&](const std::vector<int>& a, const std::vector<int>& b) { return a < b; };
  auto rec = [&](auto& self, std::size_t f, int p) -> void {
    cur[f] = p;
    if (f + 1 == F) {
      if (p != static_cast<int>(P) - 1) return;
      double s = 0;
      for (std::size_t i = F; i-- > 0;) s = log_prior(static_cast<std::size_t>(cur[i]), i) + s;
      if (best.empty() || s > best_score || (s == best_score && prefer(cur, best))) {
        best_score = s;
        best = cur;
      }
      return;
    }
    self(self, f + 1, p);
    if (p + 1 < static_cast<int>(P)) self(self, f + 1, p + 1);
  };
  rec(rec, 0, 0);
  return from_assignment(std::move(best), P, best_score);
}

Tensor gaussian_log_prior(const Tensor& mu, const Tensor& target) {
  if (mu.rank() != 2 || target.rank() != 2 || mu.cols() != target.cols()) {
    throw DimensionError("gaussian_log_prior: mu " + shape_string(mu.shape()) + " vs target " +
                         shape_string(target.shape()));
  }
  const std::size_t P = mu.rows(), F = target.rows(), M = mu.cols();
  Tensor out = Tensor::matrix(P, F);
  for (std::size_t p = 0; p < P; ++p) {
    const Scalar* m = &mu(p, 0);
    for (std::size_t f = 0; f < F; ++f) {
      const Scalar* t = &target(f, 0);
      double acc = 0;
      for (std::size_t k = 0; k < M; ++k) acc += (t[k] - m[k]) * (t[k] - m[k]);
      out(p, f) = -0.5 * acc;
    }
  }
  return out;
}

void validate_durations(const std::vector<int>& durations, std::size_t phonemes) {
  if (durations.size() != phonemes) {
    throw DimensionError("durations: expected " + std::to_string(phonemes) + " entries, got " +
                         std::to_string(durations.size()));
  }
  for (int d : durations)
    if (d < 1) throw InvalidTargetError("durations must be >= 1, got " + std::to_string(d));
}

}  // namespace dvtts
