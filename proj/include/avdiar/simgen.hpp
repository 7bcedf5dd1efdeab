// avdiar/simgen.hpp
//
// Synthetic-scenario generation and brute-force oracles for desk-scale
// verification of the pipeline and the scorer, with no models or real data.

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef AVDIAR_SIMGEN_HPP
#define AVDIAR_SIMGEN_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "avdiar/errors.hpp"
#include "avdiar/formats.hpp"
#include "avdiar/metrics.hpp"

namespace avdiar {

// Reference DER scorer: per-millisecond bitmap counting with exhaustive
// enumeration of every injective ref->hyp mapping.  Works straight off the
// turn lists; shares nothing with the sweep/assignment implementation in
// metrics.hpp that it audits.  Limits: <= 6 speakers per side, span <= 600 s.
inline DerBreakdown brute_force_der(const Diarization& ref,
                                    const Diarization& hyp,
                                    std::int64_t collar_ms) {
  if (ref.recording_id != hyp.recording_id)
    throw ValidationError("recording id mismatch");
  if (collar_ms < 0) throw ValidationError("collar must be >= 0");
  std::vector<std::string> ref_spk = ref.speakers();
  std::vector<std::string> hyp_spk = hyp.speakers();
  if (ref_spk.size() > 6 || hyp_spk.size() > 6)
    throw ValidationError("brute_force_der: speaker limit (6) exceeded");

  std::int64_t lo = 0, hi = 0;
  for (const Turn& t : ref.turns) {
    lo = std::min(lo, t.interval.onset_ms);
    hi = std::max(hi, t.interval.offset_ms);
  }
  for (const Turn& t : hyp.turns) {
    lo = std::min(lo, t.interval.onset_ms);
    hi = std::max(hi, t.interval.offset_ms);
  }
  if (hi - lo > 600'000)
    throw ValidationError("brute_force_der: span limit (600 s) exceeded");
  const std::size_t n_ms = static_cast<std::size_t>(hi - lo);

  auto idx = [lo](std::int64_t t) { return static_cast<std::size_t>(t - lo); };

  std::vector<std::vector<char>> ref_on(ref_spk.size(),
                                        std::vector<char>(n_ms, 0));
  std::vector<std::vector<char>> hyp_on(hyp_spk.size(),
                                        std::vector<char>(n_ms, 0));
  for (const Turn& t : ref.turns) {
    std::size_t s = static_cast<std::size_t>(
        std::find(ref_spk.begin(), ref_spk.end(), t.speaker) -
        ref_spk.begin());
    for (std::int64_t m = t.interval.onset_ms; m < t.interval.offset_ms; ++m)
      ref_on[s][idx(m)] = 1;
  }
  for (const Turn& t : hyp.turns) {
    std::size_t s = static_cast<std::size_t>(
        std::find(hyp_spk.begin(), hyp_spk.end(), t.speaker) -
        hyp_spk.begin());
    for (std::int64_t m = t.interval.onset_ms; m < t.interval.offset_ms; ++m)
      hyp_on[s][idx(m)] = 1;
  }

  std::vector<char> excluded(n_ms, 0);
  for (const Turn& t : ref.turns) {
    for (std::int64_t b : {t.interval.onset_ms, t.interval.offset_ms}) {
      std::int64_t from = std::max(lo, b - collar_ms);
      std::int64_t to = std::min(hi, b + collar_ms);
      for (std::int64_t m = from; m < to; ++m) excluded[idx(m)] = 1;
    }
  }

  DerBreakdown out;
  std::int64_t sum_min = 0;
  std::vector<std::vector<std::int64_t>> pair_overlap(
      ref_spk.size(), std::vector<std::int64_t>(hyp_spk.size(), 0));
  for (std::size_t m = 0; m < n_ms; ++m) {
    if (excluded[m]) continue;
    int r = 0, h = 0;
    for (const auto& row : ref_on) r += row[m];
    for (const auto& row : hyp_on) h += row[m];
    if (r == 0 && h == 0) continue;
    out.scored_ref_speech_ms += r;
    out.missed_ms += std::max(0, r - h);
    out.false_alarm_ms += std::max(0, h - r);
    sum_min += std::min(r, h);
    for (std::size_t i = 0; i < ref_on.size(); ++i) {
      if (!ref_on[i][m]) continue;
      for (std::size_t j = 0; j < hyp_on.size(); ++j)
        if (hyp_on[j][m]) ++pair_overlap[i][j];
    }
  }

  // Exhaustive mapping: permutations of the padded square cover every
  // injective partial assignment.
  std::size_t n = std::max(ref_spk.size(), hyp_spk.size());
  std::int64_t best_overlap = 0;
  if (n > 0) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      std::int64_t total = 0;
      for (std::size_t r = 0; r < ref_spk.size(); ++r)
        if (perm[r] < hyp_spk.size()) total += pair_overlap[r][perm[r]];
      best_overlap = std::max(best_overlap, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  out.confusion_ms = sum_min - best_overlap;
  finalize_rates(out);
  return out;
}

}  // namespace avdiar

#endif  // AVDIAR_SIMGEN_HPP
