#include "fsmscg/fsm.hpp"

#include <algorithm>
#include <unordered_set>

#include "json.hpp"

namespace fsmscg {

using ordered_json = nlohmann::ordered_json;

namespace {

[[noreturn]] void missing(const std::string& path) {
  throw SchemaError("missing required section \"" + path + "\"", path);
}

[[noreturn]] void wrong_type(const std::string& path, const char* expected) {
  throw SchemaError("\"" + path + "\" must be " + expected, path);
}

const ordered_json& require(const ordered_json& obj, const char* key,
                            const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) missing(path);
  return *it;
}

std::string require_string(const ordered_json& obj, const char* key,
                           const std::string& path, bool allow_empty = true) {
  const ordered_json& v = require(obj, key, path);
  if (!v.is_string()) wrong_type(path, "a string");
  std::string s = v.get<std::string>();
  if (!allow_empty && s.empty())
    throw SchemaError("\"" + path + "\" must be a non-empty string", path);
  return s;
}

void warn_unknown_keys(const ordered_json& obj,
                       std::initializer_list<const char*> known,
                       const std::string& path,
                       std::vector<std::string>* warnings) {
  if (warnings == nullptr) return;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool recognized = std::any_of(known.begin(), known.end(),
                                  [&](const char* k) { return it.key() == k; });
    if (!recognized)
      warnings->push_back("ignored unknown key \"" + path + "." + it.key() +
                          "\"");
  }
}

void check_unique(const std::string& section, const std::string& name,
                  std::unordered_set<std::string>& seen) {
  if (!seen.insert(name).second)
    throw SchemaError("duplicate " + section + " name \"" + name + "\"", name);
}

std::vector<TypedName> parse_typed_names(const ordered_json& arr,
                                         const std::string& path,
                                         std::vector<std::string>* warnings) {
  if (!arr.is_array()) wrong_type(path, "an array");
  std::vector<TypedName> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const ordered_json& entry = arr[i];
    std::string entry_path = path + "[" + std::to_string(i) + "]";
    if (!entry.is_object()) wrong_type(entry_path, "an object");
    warn_unknown_keys(entry, {"name", "type"}, entry_path, warnings);
    TypedName tn;
    tn.name = require_string(entry, "name", entry_path + ".name", false);
    tn.type_name = require_string(entry, "type", entry_path + ".type");
    out.push_back(std::move(tn));
  }
  return out;
}

ordered_json typed_names_to_json(const std::vector<TypedName>& list) {
  ordered_json arr = ordered_json::array();
  for (const TypedName& tn : list)
    arr.push_back({{"name", tn.name}, {"type", tn.type_name}});
  return arr;
}

}  // namespace

bool FsmSets::has_state(std::string_view name) const {
  return std::find(states.begin(), states.end(), name) != states.end();
}

SmartFsm parse_fsm(std::string_view document,
                   std::vector<std::string>* warnings) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(document);
  } catch (const ordered_json::parse_error& e) {
    std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    throw ParseError(e.what(), offset);
  }
  if (!doc.is_object())
    throw SchemaError("FSM document must be a JSON object", "");

  warn_unknown_keys(doc,
                    {"basic_information", "states", "initial_state",
                     "variables", "functions", "events", "transitions"},
                    "$", warnings);

  SmartFsm fsm;

  const ordered_json& info =
      require(doc, "basic_information", "basic_information");
  if (!info.is_object()) wrong_type("basic_information", "an object");
  warn_unknown_keys(info, {"name", "description"}, "basic_information",
                    warnings);
  fsm.basic_info.name =
      require_string(info, "name", "basic_information.name", false);
  fsm.basic_info.description =
      require_string(info, "description", "basic_information.description");

  const ordered_json& states = require(doc, "states", "states");
  if (!states.is_array()) wrong_type("states", "an array");
  if (states.empty())
    throw SchemaError("\"states\" must list at least one state", "states");
  std::unordered_set<std::string> seen_states;
  for (std::size_t i = 0; i < states.size(); ++i) {
    std::string path = "states[" + std::to_string(i) + "]";
    if (!states[i].is_string()) wrong_type(path, "a string");
    std::string name = states[i].get<std::string>();
    if (name.empty())
      throw SchemaError("\"" + path + "\" must be a non-empty string", path);
    check_unique("state", name, seen_states);
    fsm.states.push_back(std::move(name));
  }

  fsm.initial_state =
      require_string(doc, "initial_state", "initial_state", false);

  const ordered_json& variables = require(doc, "variables", "variables");
  if (!variables.is_array()) wrong_type("variables", "an array");
  std::unordered_set<std::string> seen_vars;
  for (std::size_t i = 0; i < variables.size(); ++i) {
    std::string path = "variables[" + std::to_string(i) + "]";
    const ordered_json& v = variables[i];
    if (!v.is_object()) wrong_type(path, "an object");
    warn_unknown_keys(v, {"name", "type", "description"}, path, warnings);
    VariableDecl decl;
    decl.name = require_string(v, "name", path + ".name", false);
    decl.type_name = require_string(v, "type", path + ".type");
    decl.description = require_string(v, "description", path + ".description");
    check_unique("variable", decl.name, seen_vars);
    fsm.variables.push_back(std::move(decl));
  }

  const ordered_json& functions = require(doc, "functions", "functions");
  if (!functions.is_array()) wrong_type("functions", "an array");
  std::unordered_set<std::string> seen_funcs;
  for (std::size_t i = 0; i < functions.size(); ++i) {
    std::string path = "functions[" + std::to_string(i) + "]";
    const ordered_json& f = functions[i];
    if (!f.is_object()) wrong_type(path, "an object");
    warn_unknown_keys(f, {"name", "description", "inputs"}, path, warnings);
    FunctionDecl decl;
    decl.name = require_string(f, "name", path + ".name", false);
    decl.description = require_string(f, "description", path + ".description");
    decl.inputs = parse_typed_names(require(f, "inputs", path + ".inputs"),
                                    path + ".inputs", warnings);
    check_unique("function", decl.name, seen_funcs);
    fsm.functions.push_back(std::move(decl));
  }

  const ordered_json& events = require(doc, "events", "events");
  if (!events.is_array()) wrong_type("events", "an array");
  std::unordered_set<std::string> seen_events;
  for (std::size_t i = 0; i < events.size(); ++i) {
    std::string path = "events[" + std::to_string(i) + "]";
    const ordered_json& e = events[i];
    if (!e.is_object()) wrong_type(path, "an object");
    warn_unknown_keys(e, {"name", "parameters", "description"}, path,
                      warnings);
    EventDecl decl;
    decl.name = require_string(e, "name", path + ".name", false);
    decl.parameters =
        parse_typed_names(require(e, "parameters", path + ".parameters"),
                          path + ".parameters", warnings);
    decl.description = require_string(e, "description", path + ".description");
    check_unique("event", decl.name, seen_events);
    fsm.events.push_back(std::move(decl));
  }

  const ordered_json& transitions = require(doc, "transitions", "transitions");
  if (!transitions.is_array()) wrong_type("transitions", "an array");
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    std::string path = "transitions[" + std::to_string(i) + "]";
    const ordered_json& t = transitions[i];
    if (!t.is_object()) wrong_type(path, "an object");
    warn_unknown_keys(t, {"from", "trigger", "to", "condition", "emits"}, path,
                      warnings);
    Transition tr;
    tr.source = require_string(t, "from", path + ".from", false);
    tr.trigger = require_string(t, "trigger", path + ".trigger", false);
    tr.target = require_string(t, "to", path + ".to", false);
    if (auto it = t.find("condition"); it != t.end() && !it->is_null()) {
      if (!it->is_string()) wrong_type(path + ".condition", "a string or null");
      tr.condition = it->get<std::string>();
    }
    if (auto it = t.find("emits"); it != t.end() && !it->is_null()) {
      if (!it->is_array()) wrong_type(path + ".emits", "an array or null");
      std::vector<std::string> emits;
      for (std::size_t j = 0; j < it->size(); ++j) {
        std::string epath = path + ".emits[" + std::to_string(j) + "]";
        if (!(*it)[j].is_string()) wrong_type(epath, "a string");
        std::string name = (*it)[j].get<std::string>();
        if (name.empty())
          throw SchemaError("\"" + epath + "\" must be a non-empty string",
                            epath);
        emits.push_back(std::move(name));
      }
      tr.emits = std::move(emits);
    }
    fsm.transitions.push_back(std::move(tr));
  }

  return fsm;
}

std::optional<std::string> invariant_breach(const SmartFsm& fsm) {
  if (fsm.basic_info.name.empty()) return "basic_information.name is empty";
  if (fsm.states.empty()) return "states is empty";
  if (fsm.initial_state.empty()) return "initial_state is empty";

  auto check_section = [](const auto& names,
                          const char* section) -> std::optional<std::string> {
    std::unordered_set<std::string> seen;
    for (const std::string& n : names) {
      if (n.empty()) return std::string(section) + " contains an empty name";
      if (!seen.insert(n).second)
        return std::string(section) + " contains duplicate name \"" + n + "\"";
    }
    return std::nullopt;
  };

  if (auto b = check_section(fsm.states, "states")) return b;

  std::vector<std::string> names;
  for (const auto& v : fsm.variables) names.push_back(v.name);
  if (auto b = check_section(names, "variables")) return b;
  names.clear();
  for (const auto& f : fsm.functions) names.push_back(f.name);
  if (auto b = check_section(names, "functions")) return b;
  names.clear();
  for (const auto& e : fsm.events) names.push_back(e.name);
  if (auto b = check_section(names, "events")) return b;

  for (std::size_t i = 0; i < fsm.transitions.size(); ++i) {
    const Transition& t = fsm.transitions[i];
    if (t.source.empty() || t.trigger.empty() || t.target.empty())
      return "transitions[" + std::to_string(i) +
             "] has an empty source, trigger, or target";
    if (t.emits)
      for (const std::string& e : *t.emits)
        if (e.empty())
          return "transitions[" + std::to_string(i) +
                 "].emits contains an empty name";
  }
  return std::nullopt;
}

std::string serialize_fsm(const SmartFsm& fsm) {
  if (auto breach = invariant_breach(fsm))
    throw ContractViolation("serialize_fsm: " + *breach);

  ordered_json doc;
  doc["basic_information"] = {{"name", fsm.basic_info.name},
                              {"description", fsm.basic_info.description}};
  doc["states"] = fsm.states;
  doc["initial_state"] = fsm.initial_state;

  ordered_json vars = ordered_json::array();
  for (const VariableDecl& v : fsm.variables)
    vars.push_back({{"name", v.name},
                    {"type", v.type_name},
                    {"description", v.description}});
  doc["variables"] = std::move(vars);

  ordered_json funcs = ordered_json::array();
  for (const FunctionDecl& f : fsm.functions)
    funcs.push_back({{"name", f.name},
                     {"description", f.description},
                     {"inputs", typed_names_to_json(f.inputs)}});
  doc["functions"] = std::move(funcs);

  ordered_json events = ordered_json::array();
  for (const EventDecl& e : fsm.events)
    events.push_back({{"name", e.name},
                      {"parameters", typed_names_to_json(e.parameters)},
                      {"description", e.description}});
  doc["events"] = std::move(events);

  ordered_json transitions = ordered_json::array();
  for (const Transition& t : fsm.transitions) {
    ordered_json tj;
    tj["from"] = t.source;
    tj["trigger"] = t.trigger;
    tj["to"] = t.target;
    tj["condition"] = t.condition ? ordered_json(*t.condition)
                                  : ordered_json(nullptr);
    tj["emits"] = t.emits ? ordered_json(*t.emits) : ordered_json(nullptr);
    transitions.push_back(std::move(tj));
  }
  doc["transitions"] = std::move(transitions);

  return doc.dump(2) + "\n";
}

FsmSets extract_sets(const SmartFsm& fsm) {
  FsmSets sets;
  sets.states = fsm.states;
  std::unordered_set<std::string> seen_trigger, seen_target;
  for (const Transition& t : fsm.transitions) {
    if (seen_trigger.insert(t.trigger).second) sets.triggers.push_back(t.trigger);
    if (seen_target.insert(t.target).second) sets.targets.push_back(t.target);
    sets.transitions.push_back({t.source, t.trigger, t.target});
  }
  return sets;
}

const std::string& canonical_fsm_schema() {
  static const std::string schema =
      "{\n"
      "  \"basic_information\": {\n"
      "    \"name\": \"<contract name>\",\n"
      "    \"description\": \"<background and function overview>\"\n"
      "  },\n"
      "  \"states\": [\"<state name>\", \"...\"],\n"
      "  \"initial_state\": \"<one of states>\",\n"
      "  \"variables\": [\n"
      "    {\"name\": \"<identifier>\", \"type\": \"<type label>\", "
      "\"description\": \"<text>\"}\n"
      "  ],\n"
      "  \"functions\": [\n"
      "    {\"name\": \"<identifier>\", \"description\": \"<text>\", "
      "\"inputs\": [{\"name\": \"<identifier>\", \"type\": \"<type label>\"}]}\n"
      "  ],\n"
      "  \"events\": [\n"
      "    {\"name\": \"<identifier>\", \"parameters\": [{\"name\": "
      "\"<identifier>\", \"type\": \"<type label>\"}], \"description\": "
      "\"<text>\"}\n"
      "  ],\n"
      "  \"transitions\": [\n"
      "    {\"from\": \"<source state>\", \"trigger\": \"<function or event "
      "name>\", \"to\": \"<target state>\", \"condition\": \"<guard text or "
      "null>\", \"emits\": [\"<event name>\"]}\n"
      "  ]\n"
      "}";
  return schema;
}

}  // namespace fsmscg
