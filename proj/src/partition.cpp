#include "entangled/partition.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <stdexcept>

namespace entangled {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

Partition::Partition(std::vector<int> labels) {
  if (labels.empty()) throw std::invalid_argument("partition: empty label sequence");
  std::map<int, int> relabel;
  for (int& x : labels) {
    if (x <= 0) throw std::invalid_argument("partition: labels must be positive");
    auto [it, inserted] = relabel.try_emplace(x, static_cast<int>(relabel.size()) + 1);
    x = it->second;
  }
  labels_ = std::move(labels);
  classes_ = static_cast<int>(relabel.size());
}

Partition Partition::parse(std::string_view text) {
  text = trim(text);
  if (text.empty()) throw std::invalid_argument("partition: empty input");
  std::vector<int> labels;
  while (true) {
    const auto comma = text.find(',');
    const auto token = trim(text.substr(0, comma));
    int value = 0;
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (token.empty() || ec != std::errc{} || ptr != end) {
      throw std::invalid_argument("partition: not an integer: '" + std::string(token) + "'");
    }
    if (value <= 0) throw std::invalid_argument("partition: labels must be positive");
    labels.push_back(value);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return Partition(std::move(labels));
}

std::vector<int> Partition::members(int label) const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    if (labels_[i] == label) out.push_back(i + 1);
  }
  return out;
}

bool Partition::is_pair() const {
  if (size() != 2 * classes_) return false;
  std::vector<int> count(classes_ + 1, 0);
  for (int x : labels_) ++count[x];
  return std::all_of(count.begin() + 1, count.end(), [](int c) { return c == 2; });
}

std::string Partition::to_string() const {
  std::string out;
  for (int i = 0; i < size(); ++i) {
    if (i) out += ',';
    out += std::to_string(labels_[i]);
  }
  return out;
}

PartitionStructure require_pair(const Partition& p) {
  if (!p.is_pair()) {
    throw std::invalid_argument("partition " + p.to_string() + " is not a pair partition");
  }
  PartitionStructure s;
  s.classPairs.assign(p.classes(), ClassPair{0, 0});
  for (int pos = 1; pos <= p.size(); ++pos) {
    auto& pair = s.classPairs[p.label(pos) - 1];
    if (pair.first == 0) {
      pair.first = pos;
    } else {
      pair.second = pos;
    }
  }
  for (const auto& pair : s.classPairs) s.iMax = std::max(s.iMax, pair.first);
  s.jNext = s.iMax + 1;
  return s;
}

bool is_crossing(const Partition& p) {
  const auto s = require_pair(p);
  for (std::size_t a = 0; a < s.classPairs.size(); ++a) {
    for (std::size_t b = 0; b < s.classPairs.size(); ++b) {
      const auto& x = s.classPairs[a];
      const auto& y = s.classPairs[b];
      if (x.first < y.first && y.first < x.second && x.second < y.second) return true;
    }
  }
  return false;
}

std::vector<Partition> enumerate_pair_partitions(int k) {
  if (k < 1 || k > 6) throw std::invalid_argument("enumerate_pair_partitions: k must be in 1..6");
  const int m = 2 * k;
  std::vector<Partition> out;
  out.reserve(static_cast<std::size_t>(pair_partition_count(k)));
  std::vector<int> labels(m, 0);
  std::vector<int> used(k + 2, 0);

  // Labels are tried in increasing order at every position, which yields
  // lexicographic output. `open` counts classes seen once.
  std::function<void(int, int, int)> extend = [&](int pos, int maxLabel, int open) {
    if (pos == m) {
      out.emplace_back(labels);
      return;
    }
    const int remaining = m - pos;
    for (int v = 1; v <= std::min(maxLabel + 1, k); ++v) {
      if (used[v] == 2) continue;
      const bool opens = used[v] == 0;
      const int nextOpen = opens ? open + 1 : open - 1;
      const int nextMax = std::max(maxLabel, v);
      // Each still-open class needs one slot, each unopened class two.
      if (nextOpen + 2 * (k - nextMax) > remaining - 1) continue;
      labels[pos] = v;
      ++used[v];
      extend(pos + 1, nextMax, nextOpen);
      --used[v];
    }
  };
  extend(0, 0, 0);
  return out;
}

ClassRemoval remove_last_class(const Partition& p) {
  if (!p.is_pair()) {
    throw std::invalid_argument("partition " + p.to_string() + " is not a pair partition");
  }
  if (p.classes() < 2) throw std::invalid_argument("remove_last_class: need at least two classes");
  const int last = p.classes();
  std::vector<int> kept;
  int kBeta = 0;
  for (int pos = 1; pos <= p.size(); ++pos) {
    if (p.label(pos) == last) {
      if (kBeta == 0) kBeta = pos;
    } else {
      kept.push_back(p.label(pos));
    }
  }
  return {Partition(std::move(kept)), kBeta};
}

long long pair_partition_count(int k) {
  long long c = 1;
  for (int j = 2 * k - 1; j > 1; j -= 2) c *= j;
  return c;
}

}  // namespace entangled
