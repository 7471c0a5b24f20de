#pragma once

#include "lpq/common.hpp"

#include <memory>
#include <numeric>
#include <optional>

namespace lpq {

struct Atom
{
  std::string label;
  double weight = 1.0;
};

class MeasureSpace;
using SpacePtr = std::shared_ptr<const MeasureSpace>;

/// Finite model of a measure space X: atoms first, then `cell_count` cells
/// of equal weight standing in for the non-atomic part. Coordinates are
/// labelled canonically so subsets serialise reproducibly.
///
/// A space built by CopiedSpace is the disjoint union of N copies of a base
/// space; coordinate (copy k, base index i) sits at k * base_dim + i.
class MeasureSpace
{
public:
  MeasureSpace(std::vector<Atom> atoms, std::size_t cell_count, double cell_weight,
               bool convenient)
      : atoms_(std::move(atoms)), cell_count_(cell_count), cell_weight_(cell_weight),
        convenient_(convenient)
  {
    for (const auto& a : atoms_) {
      if (!(a.weight > 0.0) || !std::isfinite(a.weight))
        throw error("atom '" + a.label + "' must have a positive weight");
      labels_.push_back(a.label);
    }
    if (cell_count_ > 0 && (!(cell_weight_ > 0.0) || !std::isfinite(cell_weight_)))
      throw error("cell weight must be positive");
    for (std::size_t c = 0; c < cell_count_; ++c)
      labels_.push_back("cell" + std::to_string(c));
    if (labels_.empty())
      throw error("measure space must have dimension >= 1");
    if (convenient_ && cell_count_ < 2)
      throw error("a model with fewer than 2 cells cannot be declared convenient; "
                  "use a copied space instead");
    weights_.resize(static_cast<Index>(labels_.size()));
    for (std::size_t i = 0; i < atoms_.size(); ++i)
      weights_(static_cast<Index>(i)) = atoms_[i].weight;
    for (std::size_t c = 0; c < cell_count_; ++c)
      weights_(static_cast<Index>(atoms_.size() + c)) = cell_weight_;
  }

  static SpacePtr make(std::vector<Atom> atoms, std::size_t cell_count = 0,
                       double cell_weight = 1.0, bool convenient = false)
  {
    return std::make_shared<const MeasureSpace>(std::move(atoms), cell_count, cell_weight,
                                                convenient);
  }

  /// n atoms of weight `w` each.
  static SpacePtr unit_atoms(std::size_t n, double w = 1.0)
  {
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < n; ++i)
      atoms.push_back({"a" + std::to_string(i), w});
    return make(std::move(atoms));
  }

  static SpacePtr from_weights(const Vec& w)
  {
    std::vector<Atom> atoms;
    for (Index i = 0; i < w.size(); ++i)
      atoms.push_back({"a" + std::to_string(i), w(i)});
    return make(std::move(atoms));
  }

  std::size_t dim() const { return labels_.size(); }
  const Vec& weights() const { return weights_; }
  double weight(std::size_t i) const { return weights_(static_cast<Index>(i)); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t atom_count() const { return copies_ > 1 ? 0 : atoms_.size(); }
  std::size_t cell_count() const { return cell_count_; }
  double cell_weight() const { return cell_weight_; }
  bool convenient() const { return convenient_; }
  double total_measure() const { return weights_.sum(); }

  /// Copy structure (1 copy of itself for ordinary spaces).
  std::size_t copies() const { return copies_; }
  std::size_t copy_dim() const { return copy_base_ ? copy_base_->dim() : dim(); }
  const SpacePtr& copy_base() const { return copy_base_; }
  bool is_copied() const { return static_cast<bool>(copy_base_); }

  bool same_as(const MeasureSpace& other) const
  {
    return dim() == other.dim() && weights_ == other.weights_;
  }

private:
  friend class CopiedSpace;
  MeasureSpace() = default;

  std::vector<Atom> atoms_;
  std::vector<std::string> labels_;
  Vec weights_;
  std::size_t cell_count_ = 0;
  double cell_weight_ = 1.0;
  bool convenient_ = false;
  std::size_t copies_ = 1;
  SpacePtr copy_base_;
};

/// Truncation of the countable-copy space NX to N copies.
class CopiedSpace
{
public:
  CopiedSpace(SpacePtr base, std::size_t copies) : base_(std::move(base)), copies_(copies)
  {
    if (!base_)
      throw error("copied space needs a base space");
    if (copies_ == 0)
      throw error("copied space needs at least one copy");
    auto flat = std::shared_ptr<MeasureSpace>(new MeasureSpace());
    const std::size_t d = base_->dim();
    flat->weights_.resize(static_cast<Index>(d * copies_));
    for (std::size_t k = 0; k < copies_; ++k)
      for (std::size_t i = 0; i < d; ++i) {
        flat->labels_.push_back("c" + std::to_string(k) + "/" + base_->label(i));
        flat->weights_(static_cast<Index>(k * d + i)) = base_->weight(i);
      }
    flat->convenient_ = true;
    flat->copies_ = copies_;
    flat->copy_base_ = base_;
    flat_ = std::move(flat);
  }

  const SpacePtr& base() const { return base_; }
  std::size_t copies() const { return copies_; }
  std::size_t dim() const { return copies_ * base_->dim(); }
  std::size_t index(std::size_t copy, std::size_t base_index) const
  {
    if (copy >= copies_ || base_index >= base_->dim())
      throw error("copied-space index out of range");
    return copy * base_->dim() + base_index;
  }
  /// The flattened space; every coordinate-level algorithm runs on this.
  const SpacePtr& space() const { return flat_; }

private:
  SpacePtr base_;
  std::size_t copies_;
  SpacePtr flat_;
};

/// Union of model coordinates.
class MeasurableSubset
{
public:
  MeasurableSubset(SpacePtr space, std::vector<std::size_t> indices)
      : space_(std::move(space)), indices_(std::move(indices))
  {
    std::sort(indices_.begin(), indices_.end());
    indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
    for (auto i : indices_) {
      if (i >= space_->dim())
        throw error("subset index " + std::to_string(i) + " outside dimension " +
                    std::to_string(space_->dim()));
      measure_ += space_->weight(i);
    }
    if (indices_.empty())
      throw error("degenerate subset: empty index set (use MeasurableSubset::empty)");
  }

  static MeasurableSubset empty(SpacePtr space)
  {
    MeasurableSubset s;
    s.space_ = std::move(space);
    return s;
  }

  static MeasurableSubset full(SpacePtr space)
  {
    std::vector<std::size_t> idx(space->dim());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return MeasurableSubset(std::move(space), std::move(idx));
  }

  const SpacePtr& space() const { return space_; }
  const std::vector<std::size_t>& indices() const { return indices_; }
  double measure() const { return measure_; }
  bool is_empty() const { return indices_.empty(); }
  bool contains(std::size_t i) const
  {
    return std::binary_search(indices_.begin(), indices_.end(), i);
  }
  bool disjoint_from(const MeasurableSubset& other) const
  {
    for (auto i : indices_)
      if (other.contains(i))
        return false;
    return true;
  }
  Vec indicator() const
  {
    Vec chi = Vec::Zero(static_cast<Index>(space_->dim()));
    for (auto i : indices_)
      chi(static_cast<Index>(i)) = 1.0;
    return chi;
  }

private:
  MeasurableSubset() = default;
  SpacePtr space_;
  std::vector<std::size_t> indices_;
  double measure_ = 0.0;
};

inline bool pairwise_disjoint(const std::vector<MeasurableSubset>& family)
{
  for (std::size_t a = 0; a < family.size(); ++a)
    for (std::size_t b = a + 1; b < family.size(); ++b)
      if (!family[a].disjoint_from(family[b]))
        return false;
  return true;
}

/// n pairwise-disjoint singletons at seeded random coordinates.
inline std::vector<MeasurableSubset> disjoint_family(const SpacePtr& space, std::size_t n,
                                                     std::uint64_t seed)
{
  if (n == 0)
    throw error("disjoint_family needs n >= 1");
  if (n > space->dim())
    throw error("insufficient resolution: cannot choose " + std::to_string(n) +
                " disjoint subsets of positive measure in a model of dimension " +
                std::to_string(space->dim()));
  std::vector<std::size_t> order(space->dim());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = derive_rng(seed, 0x2f);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<MeasurableSubset> family;
  family.reserve(n);
  for (std::size_t k = 0; k < n; ++k)
    family.emplace_back(space, std::vector<std::size_t>{order[k]});
  return family;
}

/// n pairwise-disjoint subsets made of random unions of coordinates; some
/// coordinates may stay unused.
inline std::vector<MeasurableSubset> random_disjoint_family(const SpacePtr& space,
                                                            std::size_t n, std::uint64_t seed)
{
  if (n == 0)
    throw error("random_disjoint_family needs n >= 1");
  if (n > space->dim())
    throw error("insufficient resolution: cannot choose " + std::to_string(n) +
                " disjoint subsets in a model of dimension " + std::to_string(space->dim()));
  Rng rng = derive_rng(seed, 0x3a);
  std::vector<std::size_t> order(space->dim());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> groups(n);
  for (std::size_t k = 0; k < n; ++k)
    groups[k].push_back(order[k]);
  for (std::size_t j = n; j < order.size(); ++j) {
    const std::size_t slot = uniform_index(rng, n + 1);
    if (slot < n)
      groups[slot].push_back(order[j]);
  }
  std::vector<MeasurableSubset> family;
  for (auto& g : groups)
    family.emplace_back(space, std::move(g));
  return family;
}

} // namespace lpq
