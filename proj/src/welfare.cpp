#include "segwelfare/welfare.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "segwelfare/errors.hpp"

namespace segwelfare {

WelfareWeight::WelfareWeight(double a) : alpha(a) {
  if (!(a > 0.0 && a <= 1.0)) {
    std::ostringstream os;
    os << "alpha = " << a << " is outside (0, 1]";
    throw Error(ErrorCode::InvalidParameter, os.str());
  }
}

double v_alpha(const DemandSpec& spec, double p, WelfareWeight w) {
  return w.alpha * consumer_surplus(spec, p) + (1.0 - w.alpha) * revenue_value(spec, p);
}

DerivStack v_alpha_derivs(const DemandSpec& spec, double p, WelfareWeight w) {
  const DerivStack d = demand_derivs(spec, p);
  const DerivStack r = revenue_derivs(spec, p);
  const double a = w.alpha;
  // CS_p = -D, so each CS derivative is minus the next-lower demand derivative.
  return {a * consumer_surplus(spec, p) + (1.0 - a) * r.d0, -a * d.d0 + (1.0 - a) * r.d1,
          -a * d.d1 + (1.0 - a) * r.d2, -a * d.d2 + (1.0 - a) * r.d3};
}

double value_function(const Family& family, const Market& m, WelfareWeight w, PricingMode mode) {
  const double p = optimal_price(family, m, mode);
  double v = 0.0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    if (m[i] > 0.0) v += m[i] * v_alpha(family.spec(i), p, w);
  }
  return v;
}

double revenue_function(const Family& family, const Market& m, PricingMode mode) {
  const double p = optimal_price(family, m, mode);
  double v = 0.0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    if (m[i] > 0.0) v += m[i] * revenue_value(family.spec(i), p);
  }
  return v;
}

// ---------------------------------------------------------------------------

Segmentation::Segmentation(std::vector<Atom> atoms, Market prior, double bayes_tol)
    : atoms_(std::move(atoms)), prior_(std::move(prior)) {
  if (atoms_.empty()) throw Error(ErrorCode::SimplexViolation, "segmentation without atoms");
  double total = 0.0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(prior_.mu().size());
  for (const Atom& a : atoms_) {
    if (a.market.size() != prior_.size()) {
      throw Error(ErrorCode::WrongDimension, "atom and prior have different type counts");
    }
    if (!(a.weight > 0.0)) throw Error(ErrorCode::SimplexViolation, "atom weights must be positive");
    total += a.weight;
    mean += a.weight * a.market.mu();
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "atom weights sum to " << total;
    throw Error(ErrorCode::SimplexViolation, os.str());
  }
  const double gap = (mean - prior_.mu()).cwiseAbs().maxCoeff();
  if (gap > bayes_tol) {
    std::ostringstream os;
    os << "atoms average to a market " << gap << " away from the prior";
    throw Error(ErrorCode::SimplexViolation, os.str());
  }
  base_ = atoms_;
}

Segmentation Segmentation::no_information(const Market& prior) {
  return Segmentation({Atom{1.0, prior}}, prior);
}

Segmentation Segmentation::full_information(const Market& prior) {
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (prior[i] > 0.0) atoms.push_back({prior[i], Market::point_mass(prior.size(), i)});
  }
  return Segmentation(std::move(atoms), prior);
}

namespace {

bool same_atoms(const std::vector<Atom>& a, const std::vector<Atom>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].weight != b[k].weight || a[k].market.mu() != b[k].market.mu()) return false;
  }
  return true;
}

bool same_split(const SplitRecord& a, const SplitRecord& b) {
  return a.atom == b.atom && a.t == b.t && a.direction == b.direction;
}

}  // namespace

bool Segmentation::is_refinement_of(const Segmentation& coarse) const {
  if (prior_.mu() != coarse.prior_.mu()) return false;
  if (coarse.atoms_.size() == 1) return true;
  const bool full = std::all_of(atoms_.begin(), atoms_.end(), [](const Atom& a) {
    return a.market.mu().maxCoeff() == 1.0;
  });
  if (full) return true;
  if (!same_atoms(base_, coarse.base_)) return false;
  if (coarse.lineage_.size() > lineage_.size()) return false;
  for (std::size_t k = 0; k < coarse.lineage_.size(); ++k) {
    if (!same_split(lineage_[k], coarse.lineage_[k])) return false;
  }
  return true;
}

Segmentation split_atom(const Segmentation& s, std::size_t k, const Eigen::VectorXd& direction,
                        double t) {
  if (k >= s.atoms_.size()) {
    throw Error(ErrorCode::InvalidParameter, "no atom " + std::to_string(k));
  }
  const Atom& a = s.atoms_[k];
  if (direction.size() + 1 != a.market.mu().size()) {
    throw Error(ErrorCode::WrongDimension, "split direction must have n - 1 entries");
  }
  if (t == 0.0) return s;
  Eigen::VectorXd step(direction.size() + 1);
  step[0] = -direction.sum();
  step.tail(direction.size()) = direction;
  step *= t;
  Market lo(a.market.mu() - step);
  Market hi(a.market.mu() + step);

  Segmentation out = s;
  out.atoms_[k] = Atom{0.5 * a.weight, lo};
  out.atoms_.insert(out.atoms_.begin() + static_cast<std::ptrdiff_t>(k) + 1,
                    Atom{0.5 * a.weight, hi});
  out.lineage_.push_back({k, direction, t});
  return out;
}

Segmentation epsilon_contract(const Segmentation& s, const Market& prior, double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "contraction factor must lie in (0, 1]");
  }
  if (eps == 1.0) return s;
  auto shrink = [&](const std::vector<Atom>& atoms) {
    std::vector<Atom> out;
    out.reserve(atoms.size());
    for (const Atom& a : atoms) {
      out.push_back({a.weight, Market(eps * a.market.mu() + (1.0 - eps) * prior.mu())});
    }
    return out;
  };
  Segmentation out(shrink(s.atoms_), prior);
  out.base_ = shrink(s.base_);
  out.lineage_ = s.lineage_;
  for (SplitRecord& r : out.lineage_) r.t *= eps;
  return out;
}

double information_size(const Segmentation& s) {
  double v = 0.0;
  for (const Atom& a : s.atoms()) v += a.weight * a.market.mu().squaredNorm();
  return v;
}

double segmentation_value(const Family& family, const Segmentation& s, WelfareWeight w,
                          PricingMode mode) {
  double v = 0.0;
  for (const Atom& a : s.atoms()) v += a.weight * value_function(family, a.market, w, mode);
  return v;
}

double segmentation_revenue(const Family& family, const Segmentation& s, PricingMode mode) {
  double v = 0.0;
  for (const Atom& a : s.atoms()) v += a.weight * revenue_function(family, a.market, mode);
  return v;
}

double delta_v_rate(const Family& family, const Segmentation& fine, const Segmentation& coarse,
                    WelfareWeight w, PricingMode mode) {
  if (!fine.is_refinement_of(coarse)) {
    throw Error(ErrorCode::NotARefinement, "no recorded mean-preserving spread links the two");
  }
  const double gap = information_size(fine) - information_size(coarse);
  if (!(gap > 1e-12)) {
    throw Error(ErrorCode::ZeroInformationGap, "the segmentations carry the same information");
  }
  return (segmentation_value(family, fine, w, mode) - segmentation_value(family, coarse, w, mode)) /
         gap;
}

}  // namespace segwelfare
