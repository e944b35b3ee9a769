#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

namespace entangled {

/// A partition of the positions {1,...,m} into k classes, stored as the label
/// sequence alpha(1),...,alpha(m).
///
/// Labels are always canonical: classes are numbered 1..k in order of first
/// occurrence, so two partitions with the same classes compare equal.
class Partition {
 public:
  /// Any sequence of positive labels is accepted and relabeled by first
  /// occurrence. Throws std::invalid_argument on an empty sequence or a
  /// non-positive label.
  explicit Partition(std::vector<int> labels);

  /// Parses "1,2,1,2" (whitespace around tokens is ignored).
  static Partition parse(std::string_view text);

  const std::vector<int>& labels() const noexcept { return labels_; }
  int size() const noexcept { return static_cast<int>(labels_.size()); }
  int classes() const noexcept { return classes_; }

  /// 1-based position.
  int label(int position) const { return labels_.at(position - 1); }

  /// Positions (1-based, ascending) carrying `label`.
  std::vector<int> members(int label) const;

  /// Every class has exactly two elements.
  bool is_pair() const;

  std::string to_string() const;

  friend bool operator==(const Partition&, const Partition&) = default;
  friend auto operator<=>(const Partition& a, const Partition& b) {
    return a.labels_ <=> b.labels_;
  }

 private:
  std::vector<int> labels_;
  int classes_ = 0;
};

struct ClassPair {
  int first;   // i_l
  int second;  // j_l
  friend bool operator==(const ClassPair&, const ClassPair&) = default;
};

/// Positional bookkeeping of a pair partition.
struct PartitionStructure {
  /// classPairs[l-1] = (i_l, j_l) for class l, with i_l < j_l.
  std::vector<ClassPair> classPairs;
  /// The greatest first element i_m.
  int iMax = 0;
  /// i_m + 1, always a closing position of some class.
  int jNext = 0;
};

/// Throws std::invalid_argument when some class does not have size 2.
PartitionStructure require_pair(const Partition& p);

/// True iff positions a<b<c<d exist with alpha(a)=alpha(c) != alpha(b)=alpha(d).
/// Only defined for pair partitions.
bool is_crossing(const Partition& p);

/// All canonical pair partitions of {1,...,2k} in lexicographic order.
/// Supported range 1 <= k <= 6.
std::vector<Partition> enumerate_pair_partitions(int k);

struct ClassRemoval {
  Partition reduced;
  /// First position of the removed class in the original partition.
  int kBeta;
};

/// Deletes both positions of class k from a pair partition with k >= 2.
ClassRemoval remove_last_class(const Partition& p);

/// (2k-1)!!
long long pair_partition_count(int k);

}  // namespace entangled
