#pragma once

#include <array>
#include <vector>

#include "noma/scenario.hpp"

namespace noma {

// Two-user clusters. Within a pair the first index is the stronger user
// (higher channel gain); ties broken by lower user index.
struct ClusterAssignment {
  std::vector<std::array<int, 2>> pairs;  // {strong, weak} user indices

  int num_clusters() const { return static_cast<int>(pairs.size()); }
};

// Pairs the strongest remaining user with the weakest remaining user:
// after sorting by descending gain, cluster i holds sorted users (i, K-1-i).
// Throws ValidationError for odd K.
ClusterAssignment group_users(const ChannelRealization& channels);

// Debug pairing of adjacent users in the sorted order: (0,1), (2,3), ...
ClusterAssignment group_users_adjacent(const ChannelRealization& channels);

}  // namespace noma
