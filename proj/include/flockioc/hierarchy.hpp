#pragma once

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace flockioc {

/// One directed leader->follower edge with the follower's tracking delay.
struct LeaderFollowerPair {
  std::string leader;
  std::string follower;
  double delay = 0.0;  ///< seconds; the follower tracks the leader this far in the past
};

/// A flock modeled as a forest of leader->follower edges. Every follower has
/// exactly one leader; at least one agent (a root) never follows anybody.
struct FlockHierarchy {
  std::vector<LeaderFollowerPair> pairs;

  std::set<std::string> agents() const;
  std::set<std::string> follower_set() const;
  std::set<std::string> root_leaders() const;

  /// The pair whose follower is `follower`, or nullptr.
  const LeaderFollowerPair* pair_for(const std::string& follower) const;

  /// Followers ordered so that every follower's leader is either a root or
  /// appears earlier in the list. Throws std::invalid_argument on cycles or
  /// duplicate followers.
  std::vector<std::string> topological_followers() const;
};

/// The built-in ten-bird flock used for synthetic runs: root leader "A" and
/// nine followers with 0.2 s / 0.6 s tracking delays.
FlockHierarchy default_hierarchy();

struct HierarchyReport {
  std::vector<std::string> issues;
  bool ok() const { return issues.empty(); }
};

/// Checks structural soundness against a data sample period: duplicate
/// followers, cycles, and delays that are negative or not an integer multiple
/// of dt (within 1e-9 s). Returns every violation instead of throwing.
HierarchyReport validate_hierarchy(const FlockHierarchy& hierarchy, double dt);

/// Parses the plain-text hierarchy format: one `leader,follower,delay_seconds`
/// per line; blank lines and lines starting with `#` are ignored.
FlockHierarchy parse_hierarchy(std::istream& in, const std::string& origin = "<stream>");
FlockHierarchy load_hierarchy(const std::string& path);

/// Resolves a CLI hierarchy spec: a file path or "builtin:table1" for the
/// built-in flock.
FlockHierarchy resolve_hierarchy(const std::string& spec);

}  // namespace flockioc
