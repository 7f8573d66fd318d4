#include "fsmscg/validate.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace fsmscg {

namespace {

std::string triple_text(const TransitionTriple& t) {
  return "(" + t.source + ", " + t.trigger + ", " + t.target + ")";
}

}  // namespace

std::string to_string(ViolationCode code) {
  switch (code) {
    case ViolationCode::InitialStateUndefined: return "INITIAL_STATE_UNDEFINED";
    case ViolationCode::TargetUndefined: return "TARGET_UNDEFINED";
    case ViolationCode::TriggerUndeclared: return "TRIGGER_UNDECLARED";
    case ViolationCode::UnreachableState: return "UNREACHABLE_STATE";
    case ViolationCode::SelfLoop: return "SELF_LOOP";
    case ViolationCode::NoCycle: return "NO_CYCLE";
    case ViolationCode::DuplicateTransition: return "DUPLICATE_TRANSITION";
  }
  return "UNKNOWN";
}

bool is_error_class(ViolationCode code, const ValidatorConfig& config) {
  if (code == ViolationCode::NoCycle)
    return config.cycle_rule == CycleRule::Error;
  return true;
}

bool CheckReport::has(ViolationCode code) const {
  auto match = [code](const Violation& v) { return v.code == code; };
  return std::any_of(format_violations.begin(), format_violations.end(),
                     match) ||
         std::any_of(graph_violations.begin(), graph_violations.end(), match);
}

std::vector<Violation> format_check(const SmartFsm& fsm, const FsmSets& sets,
                                    const ValidatorConfig& config) {
  std::vector<Violation> out;

  std::unordered_set<std::string> state_set(sets.states.begin(),
                                            sets.states.end());
  if (!state_set.count(fsm.initial_state))
    out.push_back({ViolationCode::InitialStateUndefined, fsm.initial_state,
                   "initial state \"" + fsm.initial_state +
                       "\" is not in the state set"});

  std::unordered_set<std::string> declared_triggers;
  if (config.trigger_namespace == TriggerNamespace::Functions ||
      config.trigger_namespace == TriggerNamespace::Both)
    for (const FunctionDecl& f : fsm.functions) declared_triggers.insert(f.name);
  if (config.trigger_namespace == TriggerNamespace::Events ||
      config.trigger_namespace == TriggerNamespace::Both)
    for (const EventDecl& e : fsm.events) declared_triggers.insert(e.name);

  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const TransitionTriple& t : sets.transitions) {
    if (!state_set.count(t.target))
      out.push_back({ViolationCode::TargetUndefined, triple_text(t),
                     "target state \"" + t.target +
                         "\" of transition " + triple_text(t) +
                         " is not in the state set"});
    if (!declared_triggers.count(t.trigger))
      out.push_back({ViolationCode::TriggerUndeclared, t.trigger,
                     "trigger \"" + t.trigger +
                         "\" matches no declared function or event"});
    if (!seen.insert({t.source, t.trigger, t.target}).second)
      out.push_back({ViolationCode::DuplicateTransition, triple_text(t),
                     "transition " + triple_text(t) + " is declared twice"});
  }
  return out;
}

std::vector<Violation> graph_check(const SmartFsm& fsm, const FsmSets& sets,
                                   const ValidatorConfig& config) {
  std::vector<Violation> out;

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < sets.states.size(); ++i)
    index.emplace(sets.states[i], i);
  const std::size_t n = sets.states.size();

  // Only transitions whose endpoints are declared states form edges; the
  // format check reports the dangling ones.
  std::vector<std::vector<std::size_t>> adj(n);
  for (const TransitionTriple& t : sets.transitions) {
    auto s = index.find(t.source);
    auto d = index.find(t.target);
    if (s != index.end() && d != index.end())
      adj[s->second].push_back(d->second);
  }

  // Reachability: BFS from the initial state when it is declared; an
  // undeclared initial state reaches nothing.
  std::vector<bool> reachable(n, false);
  if (auto it = index.find(fsm.initial_state); it != index.end()) {
    std::deque<std::size_t> frontier{it->second};
    reachable[it->second] = true;
    while (!frontier.empty()) {
      std::size_t u = frontier.front();
      frontier.pop_front();
      for (std::size_t v : adj[u])
        if (!reachable[v]) {
          reachable[v] = true;
          frontier.push_back(v);
        }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!reachable[i])
      out.push_back({ViolationCode::UnreachableState, sets.states[i],
                     "state \"" + sets.states[i] +
                         "\" has no path from the initial state"});

  for (const TransitionTriple& t : sets.transitions)
    if (t.source == t.target)
      out.push_back({ViolationCode::SelfLoop, triple_text(t),
                     "transition " + triple_text(t) + " is a self-loop"});

  if (config.cycle_rule != CycleRule::Off && n > 1) {
    // Iterative coloring DFS over every component; self-loop edges count
    // as cycles like any other back edge.
    enum { White, Gray, Black };
    std::vector<int> color(n, White);
    bool cycle = false;
    for (std::size_t root = 0; root < n && !cycle; ++root) {
      if (color[root] != White) continue;
      std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
      color[root] = Gray;
      while (!stack.empty() && !cycle) {
        auto& [u, next] = stack.back();
        if (next < adj[u].size()) {
          std::size_t v = adj[u][next++];
          if (color[v] == Gray) {
            cycle = true;
          } else if (color[v] == White) {
            color[v] = Gray;
            stack.push_back({v, 0});
          }
        } else {
          color[u] = Black;
          stack.pop_back();
        }
      }
    }
    if (!cycle)
      out.push_back({ViolationCode::NoCycle, "",
                     "the state graph contains no directed cycle"});
  }
  return out;
}

CheckReport validate(const SmartFsm& fsm, const ValidatorConfig& config) {
  FsmSets sets = extract_sets(fsm);
  CheckReport report;
  report.format_violations = format_check(fsm, sets, config);
  report.graph_violations = graph_check(fsm, sets, config);
  auto any_error = [&](const std::vector<Violation>& vs) {
    return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) {
      return is_error_class(v.code, config);
    });
  };
  report.passed = !any_error(report.format_violations) &&
                  !any_error(report.graph_violations);
  return report;
}

std::string CheckReport::to_json(const ValidatorConfig& config) const {
  using ordered_json = nlohmann::ordered_json;
  auto render = [&](const std::vector<Violation>& vs) {
    ordered_json arr = ordered_json::array();
    for (const Violation& v : vs)
      arr.push_back({{"code", to_string(v.code)},
                     {"subject", v.subject},
                     {"message", v.message},
                     {"severity",
                      is_error_class(v.code, config) ? "error" : "warning"}});
    return arr;
  };
  ordered_json doc;
  doc["passed"] = passed;
  doc["format_violations"] = render(format_violations);
  doc["graph_violations"] = render(graph_violations);
  return doc.dump(2) + "\n";
}

}  // namespace fsmscg
