#include "mutforest/lattice_pmf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace mutforest {

namespace {

constexpr std::uint64_t kDenseVolumeLimit = std::uint64_t{1} << 23;

void require_dim(int dim) {
  if (dim < 1) throw std::invalid_argument("lattice dimension must be >= 1");
}

}  // namespace

SparsePmf::SparsePmf(int dim) : dim_(dim) { require_dim(dim); }

SparsePmf SparsePmf::delta(int dim, std::span<const int> at) {
  require_dim(dim);
  if (static_cast<int>(at.size()) != dim) throw std::invalid_argument("delta: point has wrong dimension");
  SparsePmf out(dim);
  out.coords_.assign(at.begin(), at.end());
  out.probs_.push_back(1.0);
  return out;
}

SparsePmf SparsePmf::zero_delta(int dim) {
  LatticeVector zero(static_cast<std::size_t>(dim), 0);
  return delta(dim, zero);
}

SparsePmf SparsePmf::from_entries(int dim, std::vector<std::pair<LatticeVector, double>> entries,
                                  Support support) {
  require_dim(dim);
  for (const auto& [k, p] : entries) {
    if (static_cast<int>(k.size()) != dim) throw std::invalid_argument("pmf entry has wrong dimension");
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("pmf entry has negative or non-finite mass");
    if (support == Support::nonnegative) {
      for (int c : k) {
        if (c < 0) throw std::invalid_argument("pmf entry has a negative coordinate");
      }
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  SparsePmf out(dim);
  for (std::size_t i = 0; i < entries.size();) {
    double p = 0.0;
    std::size_t j = i;
    for (; j < entries.size() && entries[j].first == entries[i].first; ++j) p += entries[j].second;
    if (p > 0.0) {
      out.coords_.insert(out.coords_.end(), entries[i].first.begin(), entries[i].first.end());
      out.probs_.push_back(p);
    }
    i = j;
  }
  return out;
}

double SparsePmf::operator()(std::span<const int> k) const {
  if (static_cast<int>(k.size()) != dim_) throw std::invalid_argument("pmf lookup with wrong dimension");
  std::size_t lo = 0, hi = size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    const auto pt = point(mid);
    if (std::lexicographical_compare(pt.begin(), pt.end(), k.begin(), k.end())) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  if (lo < size() && std::equal(k.begin(), k.end(), point(lo).begin())) return probs_[lo];
  return 0.0;
}

double SparsePmf::at(std::initializer_list<int> k) const {
  return (*this)(std::span<const int>(k.begin(), k.size()));
}

double SparsePmf::mass() const {
  return std::accumulate(probs_.begin(), probs_.end(), 0.0);
}

double SparsePmf::mean(int axis) const {
  double m = 0.0;
  for (std::size_t i = 0; i < size(); ++i) m += probs_[i] * point(i)[static_cast<std::size_t>(axis)];
  return m;
}

int SparsePmf::max_coord(int axis) const {
  int m = std::numeric_limits<int>::min();
  for (std::size_t i = 0; i < size(); ++i) m = std::max(m, point(i)[static_cast<std::size_t>(axis)]);
  return m;
}

int SparsePmf::min_coord(int axis) const {
  int m = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < size(); ++i) m = std::min(m, point(i)[static_cast<std::size_t>(axis)]);
  return m;
}

SparsePmf SparsePmf::marginal(std::span<const int> axes) const {
  std::vector<std::pair<LatticeVector, double>> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    LatticeVector k;
    k.reserve(axes.size());
    for (int a : axes) k.push_back(point(i)[static_cast<std::size_t>(a)]);
    out.emplace_back(std::move(k), probs_[i]);
  }
  return from_entries(static_cast<int>(axes.size()), std::move(out), Support::signed_values);
}

SparsePmf SparsePmf::shifted(std::span<const int> offset) const {
  if (static_cast<int>(offset.size()) != dim_) throw std::invalid_argument("shift with wrong dimension");
  SparsePmf out = *this;
  for (std::size_t i = 0; i < size(); ++i) {
    for (int a = 0; a < dim_; ++a) out.coords_[i * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(a)] += offset[static_cast<std::size_t>(a)];
  }
  return out;
}

SparsePmf SparsePmf::scaled(double factor) const {
  SparsePmf out = *this;
  for (auto& p : out.probs_) p *= factor;
  return out;
}

std::vector<std::pair<LatticeVector, double>> SparsePmf::entries() const {
  std::vector<std::pair<LatticeVector, double>> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    const auto pt = point(i);
    out.emplace_back(LatticeVector(pt.begin(), pt.end()), probs_[i]);
  }
  return out;
}

PmfAccumulator::PmfAccumulator(int dim, LatticeVector lo, LatticeVector hi)
    : dim_(dim), lo_(std::move(lo)), stride_(static_cast<std::size_t>(dim)), extent_(static_cast<std::size_t>(dim)) {
  std::uint64_t volume = 1;
  bool overflow = false;
  for (int a = dim_ - 1; a >= 0; --a) {
    const auto ext = static_cast<std::uint64_t>(static_cast<std::int64_t>(hi[static_cast<std::size_t>(a)]) - lo_[static_cast<std::size_t>(a)] + 1);
    extent_[static_cast<std::size_t>(a)] = ext;
    stride_[static_cast<std::size_t>(a)] = volume;
    if (ext != 0 && volume > std::numeric_limits<std::uint64_t>::max() / 2 / ext) overflow = true;
    volume *= ext;
  }
  if (overflow) throw std::overflow_error("convolution support box too large to index");
  volume_ = volume;
  dense_ = volume_ <= kDenseVolumeLimit;
  if (dense_) dense_values_.assign(volume_, 0.0);
}

std::uint64_t PmfAccumulator::index_of(std::span<const int> k) const {
  std::uint64_t idx = 0;
  for (int a = 0; a < dim_; ++a) {
    idx += static_cast<std::uint64_t>(k[static_cast<std::size_t>(a)] - lo_[static_cast<std::size_t>(a)]) * stride_[static_cast<std::size_t>(a)];
  }
  return idx;
}

void PmfAccumulator::add(std::span<const int> k, double p) {
  const auto idx = index_of(k);
  if (dense_) {
    dense_values_[idx] += p;
  } else {
    sparse_values_.emplace_back(idx, p);
  }
}

SparsePmf PmfAccumulator::finish() {
  SparsePmf out(dim_);
  auto emit = [&](std::uint64_t idx, double p) {
    for (int a = 0; a < dim_; ++a) {
      const auto s = stride_[static_cast<std::size_t>(a)];
      out.coords_.push_back(lo_[static_cast<std::size_t>(a)] + static_cast<int>(idx / s));
      idx %= s;
    }
    out.probs_.push_back(p);
  };
  if (dense_) {
    for (std::uint64_t i = 0; i < volume_; ++i) {
      if (dense_values_[i] != 0.0) emit(i, dense_values_[i]);
    }
  } else {
    std::sort(sparse_values_.begin(), sparse_values_.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < sparse_values_.size();) {
      double p = 0.0;
      std::size_t j = i;
      for (; j < sparse_values_.size() && sparse_values_[j].first == sparse_values_[i].first; ++j) p += sparse_values_[j].second;
      if (p != 0.0) emit(sparse_values_[i].first, p);
      i = j;
    }
  }
  return out;
}

namespace {

CappedPmf convolve_impl(const SparsePmf& p, const SparsePmf& q, const SupportCap* cap) {
  if (p.dim() != q.dim()) throw std::invalid_argument("convolve: dimension mismatch");
  const int d = p.dim();
  if (p.empty() || q.empty()) return {SparsePmf(d), 0.0};
  LatticeVector lo(static_cast<std::size_t>(d)), hi(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    lo[static_cast<std::size_t>(a)] = p.min_coord(a) + q.min_coord(a);
    hi[static_cast<std::size_t>(a)] = p.max_coord(a) + q.max_coord(a);
    if (cap) hi[static_cast<std::size_t>(a)] = std::min(hi[static_cast<std::size_t>(a)], cap->max_coord.at(static_cast<std::size_t>(a)));
  }
  for (int a = 0; a < d; ++a) {
    if (hi[static_cast<std::size_t>(a)] < lo[static_cast<std::size_t>(a)]) {
      return {SparsePmf(d), p.mass() * q.mass()};
    }
  }
  PmfAccumulator acc(d, lo, hi);
  double dropped = 0.0;
  LatticeVector k(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto a = p.point(i);
    const double pa = p.prob(i);
    for (std::size_t j = 0; j < q.size(); ++j) {
      const auto b = q.point(j);
      bool inside = true;
      for (int c = 0; c < d; ++c) {
        k[static_cast<std::size_t>(c)] = a[static_cast<std::size_t>(c)] + b[static_cast<std::size_t>(c)];
        if (k[static_cast<std::size_t>(c)] > hi[static_cast<std::size_t>(c)]) inside = false;
      }
      if (inside) {
        acc.add(k, pa * q.prob(j));
      } else {
        dropped += pa * q.prob(j);
      }
    }
  }
  return {acc.finish(), dropped};
}

}  // namespace

SparsePmf convolve(const SparsePmf& p, const SparsePmf& q) {
  return convolve_impl(p, q, nullptr).pmf;
}

CappedPmf convolve(const SparsePmf& p, const SparsePmf& q, const SupportCap& cap) {
  if (static_cast<int>(cap.max_coord.size()) != p.dim()) throw std::invalid_argument("support cap has wrong dimension");
  return convolve_impl(p, q, &cap);
}

CappedPmf convolve_power(const SparsePmf& p, std::int64_t n, const std::optional<SupportCap>& cap) {
  if (n < 0) throw std::invalid_argument("convolve_power: negative exponent");
  auto step = [&](const SparsePmf& a, const SparsePmf& b) {
    return cap ? convolve(a, b, *cap).pmf : convolve(a, b);
  };
  const std::int64_t exponent = n;
  std::optional<SparsePmf> result;
  SparsePmf base = p;
  while (n > 0) {
    if (n & 1) result = result ? step(*result, base) : base;
    n >>= 1;
    if (n > 0) base = step(base, base);
  }
  if (!result) return {SparsePmf::zero_delta(p.dim()), 0.0};
  double dropped = 0.0;
  if (cap) {
    // Points removed by the cap never come back, so the loss is the deficit
    // against mass(p)^n.
    dropped = std::max(0.0, std::pow(p.mass(), static_cast<double>(exponent)) - result->mass());
  }
  return {std::move(*result), dropped};
}

ProgenyLaw::ProgenyLaw(std::vector<SparsePmf> laws, double mass_tolerance) : laws_(std::move(laws)) {
  if (laws_.empty()) throw std::invalid_argument("progeny law needs at least one type");
  const int d = static_cast<int>(laws_.size());
  for (int i = 0; i < d; ++i) {
    const auto& nu = laws_[static_cast<std::size_t>(i)];
    if (nu.dim() != d) {
      throw std::invalid_argument("progeny law of type " + std::to_string(i + 1) + " has dimension " +
                                  std::to_string(nu.dim()) + ", expected " + std::to_string(d));
    }
    for (std::size_t e = 0; e < nu.size(); ++e) {
      for (int c : nu.point(e)) {
        if (c < 0) throw std::invalid_argument("progeny law of type " + std::to_string(i + 1) + " has a negative child count");
      }
    }
    if (std::abs(nu.mass() - 1.0) > mass_tolerance) {
      throw std::invalid_argument("progeny law of type " + std::to_string(i + 1) + " has total mass " +
                                  std::to_string(nu.mass()) + " != 1");
    }
  }
}

bool ProgenyLaw::non_singular() const {
  for (const auto& nu : laws_) {
    double single = 0.0;
    for (std::size_t e = 0; e < nu.size(); ++e) {
      const auto pt = nu.point(e);
      if (std::accumulate(pt.begin(), pt.end(), 0) == 1) single += nu.prob(e);
    }
    if (single < 1.0 - 1e-15) return true;
  }
  return false;
}

bool ProgenyLaw::no_single_self_child() const {
  for (int i = 0; i < dim(); ++i) {
    LatticeVector e(static_cast<std::size_t>(dim()), 0);
    e[static_cast<std::size_t>(i)] = 1;
    if (law(i)(e) > 0.0) return false;
  }
  return true;
}

SignedStepPmf shifted_step_law(const ProgenyLaw& law, int type) {
  if (type < 0 || type >= law.dim()) throw std::out_of_range("shifted_step_law: type index out of range");
  LatticeVector offset(static_cast<std::size_t>(law.dim()), 0);
  offset[static_cast<std::size_t>(type)] = -1;
  return {type, law.law(type).shifted(offset)};
}

std::string to_string(Criticality c) {
  switch (c) {
    case Criticality::subcritical: return "subcritical";
    case Criticality::critical: return "critical";
    case Criticality::supercritical: return "supercritical";
  }
  return "?";
}

Criticality classify_spectral_radius(double rho) {
  if (std::abs(rho - 1.0) < kCriticalityTolerance) return Criticality::critical;
  return rho < 1.0 ? Criticality::subcritical : Criticality::supercritical;
}

Eigen::MatrixXd mean_matrix(const ProgenyLaw& law) {
  const int d = law.dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = law.law(i).mean(j);
  }
  return m;
}

MeanReport mean_report(const ProgenyLaw& law) {
  MeanReport r;
  r.mean_matrix = mean_matrix(law);
  r.irreducible = is_irreducible(r.mean_matrix);
  r.primitive = r.irreducible && is_primitive(r.mean_matrix);
  r.non_singular = law.non_singular();
  const int d = law.dim();
  r.diag_subunit.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) r.diag_subunit[static_cast<std::size_t>(i)] = r.mean_matrix(i, i) < 1.0;
  if (r.primitive) {
    const auto perron = perron_eigenpair(r.mean_matrix);
    r.spectral_radius = perron.rho;
    r.right_eigvec = perron.right;
    r.left_eigvec = perron.left;
  } else {
    // Spectral radius of a reducible matrix: max over its eigenvalues' moduli.
    Eigen::EigenSolver<Eigen::MatrixXd> es(r.mean_matrix, false);
    r.spectral_radius = es.eigenvalues().cwiseAbs().maxCoeff();
  }
  r.criticality = classify_spectral_radius(r.spectral_radius);
  r.xlogx_ok = true;  // finite support
  return r;
}

std::string to_string(MutationCondition c) {
  switch (c) {
    case MutationCondition::A: return "A";
    case MutationCondition::B: return "B";
    case MutationCondition::neither: return "neither";
  }
  return "?";
}

MutationCondition condition_ab(const ProgenyLaw& law, int type) {
  if (type < 0 || type >= law.dim()) throw std::out_of_range("condition_ab: type index out of range");
  const auto m = mean_matrix(law);
  // m_ii is a finite sum of products of inputs; compare with a 1e-12 slack so
  // that an exactly critical diagonal is not misread as > 1.
  if (m(type, type) <= 1.0 + 1e-12) return MutationCondition::A;
  for (int j = 0; j < law.dim(); ++j) {
    if (j != type && m(type, j) > 0.0) return MutationCondition::neither;
  }
  return MutationCondition::B;
}

Eigen::VectorXd extinction_probabilities(const ProgenyLaw& law, double tolerance, int max_iterations) {
  const int d = law.dim();
  Eigen::VectorXd q = Eigen::VectorXd::Zero(d);
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd next(d);
    for (int i = 0; i < d; ++i) {
      const auto& nu = law.law(i);
      double s = 0.0;
      for (std::size_t e = 0; e < nu.size(); ++e) {
        double term = nu.prob(e);
        const auto pt = nu.point(e);
        for (int j = 0; j < d; ++j) {
          if (pt[static_cast<std::size_t>(j)] > 0) term *= std::pow(q(j), pt[static_cast<std::size_t>(j)]);
        }
        s += term;
      }
      next(i) = s;
    }
    const double diff = (next - q).cwiseAbs().maxCoeff();
    q = next;
    if (diff < tolerance) break;
  }
  return q;
}

}  // namespace mutforest
