#include "flockioc/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace flockioc {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::set<std::string> FlockHierarchy::agents() const {
  std::set<std::string> out;
  for (const auto& p : pairs) {
    out.insert(p.leader);
    out.insert(p.follower);
  }
  return out;
}

std::set<std::string> FlockHierarchy::follower_set() const {
  std::set<std::string> out;
  for (const auto& p : pairs) out.insert(p.follower);
  return out;
}

std::set<std::string> FlockHierarchy::root_leaders() const {
  std::set<std::string> roots = agents();
  for (const auto& p : pairs) roots.erase(p.follower);
  return roots;
}

const LeaderFollowerPair* FlockHierarchy::pair_for(const std::string& follower) const {
  for (const auto& p : pairs) {
    if (p.follower == follower) return &p;
  }
  return nullptr;
}

std::vector<std::string> FlockHierarchy::topological_followers() const {
  std::set<std::string> seen_followers;
  for (const auto& p : pairs) {
    if (!seen_followers.insert(p.follower).second) {
      throw std::invalid_argument("hierarchy: duplicate follower '" + p.follower + "'");
    }
  }
  const std::set<std::string> roots = root_leaders();
  std::set<std::string> placed(roots.begin(), roots.end());
  std::vector<std::string> order;
  // Kahn-style sweep: emit followers whose leader is already placed.
  bool progressed = true;
  while (order.size() < pairs.size() && progressed) {
    progressed = false;
    for (const auto& p : pairs) {
      if (placed.count(p.follower)) continue;
      if (placed.count(p.leader)) {
        placed.insert(p.follower);
        order.push_back(p.follower);
        progressed = true;
      }
    }
  }
  if (order.size() < pairs.size()) {
    throw std::invalid_argument("hierarchy: cycle detected among leader/follower pairs");
  }
  return order;
}

FlockHierarchy default_hierarchy() {
  return FlockHierarchy{{
      {"A", "M", 0.2},
      {"A", "G", 0.6},
      {"G", "B", 0.2},
      {"G", "D", 0.2},
      {"M", "I", 0.6},
      {"B", "J", 0.2},
      {"B", "L", 0.2},
      {"D", "H", 0.2},
      {"H", "C", 0.2},
  }};
}

HierarchyReport validate_hierarchy(const FlockHierarchy& hierarchy, double dt) {
  HierarchyReport report;
  if (!(dt > 0.0)) {
    report.issues.push_back("sample period must be positive");
    return report;
  }

  std::map<std::string, int> follower_count;
  for (const auto& p : hierarchy.pairs) {
    ++follower_count[p.follower];
    if (p.leader.empty() || p.follower.empty()) {
      report.issues.push_back("pair with empty agent id");
    }
    if (p.leader == p.follower) {
      report.issues.push_back("agent '" + p.follower + "' follows itself");
    }
    if (p.delay < 0.0) {
      report.issues.push_back("follower '" + p.follower + "': negative delay");
    } else {
      const double steps = std::round(p.delay / dt);
      if (std::abs(steps * dt - p.delay) > 1e-9) {
        std::ostringstream msg;
        msg << "follower '" << p.follower << "': delay " << p.delay
            << " s is not an integer multiple of the sample period " << dt << " s";
        report.issues.push_back(msg.str());
      }
    }
  }
  for (const auto& [follower, count] : follower_count) {
    if (count > 1) {
      report.issues.push_back("duplicate follower '" + follower + "'");
    }
  }
  try {
    (void)hierarchy.topological_followers();
  } catch (const std::invalid_argument& e) {
    // Duplicate followers were already reported above; keep only cycle news.
    const std::string what = e.what();
    if (what.find("cycle") != std::string::npos) report.issues.push_back(what);
  }
  return report;
}

FlockHierarchy parse_hierarchy(std::istream& in, const std::string& origin) {
  FlockHierarchy h;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;

    std::vector<std::string> fields;
    std::stringstream ss(body);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));

    const std::string where = origin + ":" + std::to_string(line_no);
    if (fields.size() != 3) {
      throw std::runtime_error(where + ": expected 'leader,follower,delay_seconds'");
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw std::runtime_error(where + ": empty agent id");
    }
    double delay = 0.0;
    try {
      std::size_t used = 0;
      delay = std::stod(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw std::runtime_error(where + ": cannot parse delay '" + fields[2] + "'");
    }
    h.pairs.push_back({fields[0], fields[1], delay});
  }
  return h;
}

FlockHierarchy load_hierarchy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open hierarchy file '" + path + "'");
  return parse_hierarchy(in, path);
}

FlockHierarchy resolve_hierarchy(const std::string& spec) {
  if (spec == "builtin:table1") return default_hierarchy();
  if (spec.rfind("builtin:", 0) == 0) {
    throw std::runtime_error("unknown builtin hierarchy '" + spec +
                             "' (available: builtin:table1)");
  }
  return load_hierarchy(spec);
}

}  // namespace flockioc
