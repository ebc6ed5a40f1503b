#include "noma/grouping.hpp"

#include <algorithm>
#include <numeric>

#include "noma/errors.hpp"

namespace noma {
namespace {

std::vector<int> sorted_by_gain(const ChannelRealization& channels) {
  if (channels.gains.empty()) throw ValidationError("cannot group an empty user set");
  if (channels.gains.size() % 2 != 0) throw ValidationError("grouping needs an even user count");
  std::vector<int> order(channels.gains.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (channels.gains[a] != channels.gains[b]) return channels.gains[a] > channels.gains[b];
    return a < b;
  });
  return order;
}

}  // namespace

ClusterAssignment group_users(const ChannelRealization& channels) {
  std::vector<int> order = sorted_by_gain(channels);
  const int n = static_cast<int>(order.size());
  ClusterAssignment out;
  out.pairs.reserve(n / 2);
  for (int i = 0; i < n / 2; ++i) {
    out.pairs.push_back({order[i], order[n - 1 - i]});
  }
  return out;
}

ClusterAssignment group_users_adjacent(const ChannelRealization& channels) {
  std::vector<int> order = sorted_by_gain(channels);
  ClusterAssignment out;
  out.pairs.reserve(order.size() / 2);
  for (std::size_t i = 0; i + 1 < order.size(); i += 2) {
    out.pairs.push_back({order[i], order[i + 1]});
  }
  return out;
}

}  // namespace noma
