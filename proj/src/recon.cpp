#include "osmm/recon.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <ostream>

#include "osmm/tomo.hpp"

namespace osmm {

namespace {

constexpr std::uint64_t kInitStream = 1000;
constexpr std::uint64_t kSubsetStream = 1000;  // + n
constexpr std::uint64_t kWholeStream = 2000;

void check_finite(const Array2& x, int t, const char* stage) {
  if (!x.allFinite())
    throw DivergenceError(std::string("non-finite ") + stage + " state at step t=" + std::to_string(t));
}

std::string lower(std::string s) {
  for (auto& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Osmm: return "OSMM";
    case Variant::MsdmOnly: return "MSDM-only";
    case Variant::OwdmOnly: return "OWDM-only";
    case Variant::FbpOnly: return "FBP-only";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  const std::string l = lower(s);
  if (l == "osmm") return Variant::Osmm;
  if (l == "msdm-only" || l == "msdm") return Variant::MsdmOnly;
  if (l == "owdm-only" || l == "owdm") return Variant::OwdmOnly;
  if (l == "fbp-only" || l == "fbp") return Variant::FbpOnly;
  throw ConfigError("unknown variant '" + s + "' (expected OSMM, MSDM-only, OWDM-only or FBP-only)");
}

void ReconConfig::validate(int num_views) const {
  if (num_subsets < 1 || num_views % num_subsets != 0)
    throw ConfigError("subset count " + std::to_string(num_subsets) + " must divide the view count " +
                      std::to_string(num_views));
  schedule.validate();
}

OracleSet::OracleSet(const std::vector<Array2>& references, const SubsetIndexMap& map) : whole(references) {
  for (int n = 1; n <= map.num_subsets(); ++n) {
    std::vector<Array2> parts;
    parts.reserve(references.size());
    for (const auto& r : references) parts.push_back(os_extract(r, map, n));
    subsets.emplace_back(std::move(parts));
  }
}

ReconModels OracleSet::models() const {
  ReconModels m;
  m.whole = &whole;
  for (const auto& s : subsets) m.subsets.push_back(&s);
  return m;
}

Array2 data_consistency(const Array2& x, const Array2& y, const ViewMask& mask) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) throw ShapeError("data consistency: x and y differ in shape");
  if (mask.size() != x.rows()) throw ShapeError("data consistency: mask length does not match the view count");
  Array2 out = x;
  for (int v = 0; v < mask.size(); ++v)
    if (mask[v]) out.row(v) = y.row(v);
  return out;
}

ReconProblem::ReconProblem(const MaskedSinogram& y, const ReconConfig& cfg)
    : y_(y),
      cfg_(cfg),
      map_((cfg.validate(y.data.geometry.num_views), SubsetIndexMap(y.data.geometry.num_views, cfg.num_subsets))),
      init_rng_(make_stream(cfg.seed, kInitStream)),
      whole_rng_(make_stream(cfg.seed, kWholeStream)) {
  y_.data.validate_shape();
  if (y_.mask.size() != y_.data.geometry.num_views) throw ShapeError("mask length does not match the view count");
  for (int n = 1; n <= cfg.num_subsets; ++n) {
    subset_masks_.push_back(mask_for_subset(y_.mask, map_, n));
    subset_y_.push_back(os_extract(y_.data.values, map_, n));
    subset_rng_.push_back(make_stream(cfg.seed, kSubsetStream + std::uint64_t(n)));
  }
  counts_ = osmm::measured_per_subset(y_.mask, map_);
  if (cfg.variant == Variant::Osmm || cfg.variant == Variant::MsdmOnly)
    for (int n = 1; n <= cfg.num_subsets; ++n)
      if (counts_[std::size_t(n - 1)] == 0)
        warnings_.push_back("subset " + std::to_string(n) + " of " + std::to_string(cfg.num_subsets) +
                            " receives no measured views");
}

ReconState ReconProblem::initial_state() {
  ReconState s;
  s.t = cfg_.schedule.steps - 1;
  s.merged = cfg_.schedule.sigma_max *
             standard_normal(y_.data.values.rows(), y_.data.values.cols(), init_rng_);
  s.subsets = os_split(s.merged, map_);
  return s;
}

double ReconProblem::fidelity(const Array2& x) const {
  double f = 0.0;
  for (int v = 0; v < y_.mask.size(); ++v)
    if (y_.mask[v]) f += (x.row(v) - y_.data.values.row(v)).squaredNorm();
  return f;
}

void msdm_step(ReconProblem& p, ReconState& state, const ReconModels& models, int t) {
  const int n_sub = p.map().num_subsets();
  if (state.t != t + 1) throw std::invalid_argument("msdm_step expects subsets at level t+1");
  if (int(models.subsets.size()) != n_sub || int(state.subsets.size()) != n_sub)
    throw ShapeError("msdm_step: need one model and one state per subset");
  const auto& s = p.config().schedule;
  const double lo = s.sigma(t), hi = s.sigma(t + 1);
  StepDiagnostics d;
  d.t = t;
  for (int n = 1; n <= n_sub; ++n) {
    Array2& x = state.subsets[std::size_t(n - 1)];
    const Array2 score = models.subsets[std::size_t(n - 1)]->evaluate(x, hi);
    Array2 next = predictor_step(x, score, lo, hi, p.subset_stream(n));
    next = data_consistency(next, p.subset_measurement(n), p.subset_mask(n));
    check_finite(next, t, "subset");
    d.r1 += (next - x).squaredNorm();
    x = std::move(next);
  }
  state.merged = os_merge(state.subsets, p.map());
  d.fidelity = p.fidelity(state.merged);
  state.t = t;
  state.diagnostics.push_back(d);
}

void owdm_step(ReconProblem& p, ReconState& state, const ScoreModel& whole, int t) {
  if (state.t != t) throw std::invalid_argument("owdm_step expects subsets at level t");
  const auto& s = p.config().schedule;
  const double lo = s.sigma(t), hi = s.sigma(t + 1);
  const Array2 merged = os_merge(state.subsets, p.map());
  Array2 next = predictor_step(merged, whole.evaluate(merged, hi), lo, hi, p.whole_stream());
  next = data_consistency(next, p.measurement().data.values, p.measurement().mask);
  check_finite(next, t, "whole");

  StepDiagnostics d;
  if (!state.diagnostics.empty() && state.diagnostics.back().t == t) {
    d = state.diagnostics.back();
    state.diagnostics.pop_back();
  }
  d.t = t;
  d.r2 = (next - merged).squaredNorm();
  d.fidelity = p.fidelity(next);
  state.diagnostics.push_back(d);

  state.merged = std::move(next);
  state.subsets = os_split(state.merged, p.map());
}

namespace {

ReconResult finish(ReconProblem& p, ReconState& state, const ImageGrid& grid) {
  ReconResult r;
  r.sinogram = Sinogram(p.measurement().data.geometry, state.merged);
  r.image = fbp(r.sinogram, grid);
  check_finite(r.image.values, 0, "image");
  r.diagnostics = std::move(state.diagnostics);
  r.measured_per_subset = p.measured_per_subset();
  r.warnings = p.warnings();
  return r;
}

void require_models(const ReconModels& m, const ReconConfig& cfg, bool whole, bool subsets) {
  if (whole && m.whole == nullptr) throw ConfigError("variant " + to_string(cfg.variant) + " needs a whole model");
  if (subsets) {
    if (int(m.subsets.size()) != cfg.num_subsets)
      throw ConfigError("variant " + to_string(cfg.variant) + " needs " + std::to_string(cfg.num_subsets) +
                        " subset models, got " + std::to_string(m.subsets.size()));
    for (const auto* s : m.subsets)
      if (s == nullptr) throw ConfigError("missing subset model");
  }
}

}  // namespace

ReconResult osmm_reconstruct(const MaskedSinogram& y, const ReconModels& models, const ReconConfig& cfg,
                             const ImageGrid& grid) {
  if (cfg.variant != Variant::Osmm) throw ConfigError("osmm_reconstruct needs variant OSMM");
  require_models(models, cfg, true, true);
  ReconProblem p(y, cfg);
  ReconState state = p.initial_state();
  for (int t = cfg.schedule.steps - 2; t >= 0; --t) {
    msdm_step(p, state, models, t);
    owdm_step(p, state, *models.whole, t);
  }
  return finish(p, state, grid);
}

ReconResult ablation_reconstruct(const MaskedSinogram& y, const ReconModels& models, const ReconConfig& cfg,
                                 const ImageGrid& grid) {
  ReconProblem p(y, cfg);
  ReconState state = p.initial_state();
  if (cfg.variant == Variant::MsdmOnly) {
    require_models(models, cfg, false, true);
    for (int t = cfg.schedule.steps - 2; t >= 0; --t) msdm_step(p, state, models, t);
  } else if (cfg.variant == Variant::OwdmOnly) {
    require_models(models, cfg, true, false);
    const auto& s = cfg.schedule;
    for (int t = s.steps - 2; t >= 0; --t) {
      const double lo = s.sigma(t), hi = s.sigma(t + 1);
      Array2 next = predictor_step(state.merged, models.whole->evaluate(state.merged, hi), lo, hi, p.whole_stream());
      next = data_consistency(next, y.data.values, y.mask);
      check_finite(next, t, "whole");
      StepDiagnostics d;
      d.t = t;
      d.r2 = (next - state.merged).squaredNorm();
      d.fidelity = p.fidelity(next);
      state.diagnostics.push_back(d);
      state.merged = std::move(next);
      state.t = t;
    }
  } else {
    throw ConfigError("ablation_reconstruct needs variant MSDM-only or OWDM-only");
  }
  return finish(p, state, grid);
}

ReconResult reconstruct(const MaskedSinogram& y, const ReconModels& models, const ReconConfig& cfg,
                        const ImageGrid& grid) {
  switch (cfg.variant) {
    case Variant::Osmm: return osmm_reconstruct(y, models, cfg, grid);
    case Variant::MsdmOnly:
    case Variant::OwdmOnly: return ablation_reconstruct(y, models, cfg, grid);
    case Variant::FbpOnly: {
      ReconResult r;
      r.sinogram = y.data;
      r.image = fbp(y, grid);
      return r;
    }
  }
  throw ConfigError("unknown variant");
}

void write_diagnostics_csv(std::ostream& out, const ReconResult& r) {
  std::string counts;
  for (std::size_t i = 0; i < r.measured_per_subset.size(); ++i)
    counts += (i ? ";" : "") + std::to_string(r.measured_per_subset[i]);
  out << "t,R1,R2,fidelity,per_subset_measured\n";
  out.precision(17);
  for (const auto& d : r.diagnostics) out << d.t << ',' << d.r1 << ',' << d.r2 << ',' << d.fidelity << ',' << counts << '\n';
}

}  // namespace osmm
