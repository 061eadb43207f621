#include "psdg/json_io.hpp"

#include <string>

#include "psdg/error.hpp"

namespace psdg {

using nlohmann::json;

json state_to_json(const Psdg& g, const StatePoint& state) {
  json out = json::object();
  for (std::size_t f = 0; f < g.features().size(); ++f) {
    out[g.features()[f].name] = g.features()[f].values[state.values[f]];
  }
  return out;
}

json trajectory_header_json(const Psdg& g, const Trajectory& trajectory, std::size_t index) {
  return {{"trajectory", index},
          {"seed", trajectory.seed},
          {"q0", state_to_json(g, trajectory.initial)},
          {"steps", trajectory.steps.size()},
          {"completed", trajectory.completed}};
}

json trajectory_step_json(const Psdg& g, const Trajectory& trajectory, std::size_t t, std::size_t index) {
  const auto& step = trajectory.steps[t - 1];
  json stack = json::array();
  for (const auto& f : step.stack.frames) {
    stack.push_back({{"level", f.level},
                     {"symbol", g.name(f.symbol)},
                     {"production", g.production(f.production).label},
                     {"cursor", f.cursor}});
  }
  return {{"trajectory", index},
          {"t", t},
          {"stack", std::move(stack)},
          {"terminal", g.name(step.stack.leaf)},
          {"state", state_to_json(g, step.state)}};
}

json observation_json(const Psdg& g, std::size_t t, const StatePoint& state) {
  json observe = json::object();
  for (std::size_t f = 0; f < g.features().size(); ++f) {
    observe[g.features()[f].name] = json::array({g.features()[f].values[state.values[f]]});
  }
  return {{"t", t}, {"observe", std::move(observe)}};
}

Observation observation_from_json(const Psdg& g, const json& j) {
  if (!j.is_object()) throw FormatError("observation must be a JSON object");
  auto t = j.find("t");
  if (t == j.end() || !t->is_number_unsigned()) {
    throw FormatError("observation needs a non-negative integer \"t\"");
  }
  std::vector<std::vector<FeatureValue>> allowed(g.features().size());
  for (std::size_t f = 0; f < allowed.size(); ++f) {
    for (std::size_t v = 0; v < g.features()[f].values.size(); ++v) {
      allowed[f].push_back(static_cast<FeatureValue>(v));
    }
  }
  if (auto obs = j.find("observe"); obs != j.end()) {
    if (!obs->is_object()) throw FormatError("\"observe\" must be an object");
    for (const auto& [name, values] : obs->items()) {
      const auto f = g.find_feature(name);
      if (!f) throw FormatError("unknown feature '" + name + "'");
      const json list = values.is_string() ? json::array({values}) : values;
      if (!list.is_array() || list.empty()) {
        throw FormatError("feature '" + name + "' needs a nonempty list of values");
      }
      allowed[*f].clear();
      for (const auto& v : list) {
        if (!v.is_string()) throw FormatError("values of '" + name + "' must be strings");
        const auto value = g.find_value(*f, v.get<std::string>());
        if (!value) throw FormatError("unknown value '" + v.get<std::string>() + "' for '" + name + "'");
        allowed[*f].push_back(*value);
      }
    }
  }
  return {t->get<std::size_t>(), StateSet(std::move(allowed))};
}

Observation parse_observation_line(const Psdg& g, std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
  return observation_from_json(g, j);
}

json plans_to_json(const Psdg& g, const FrameCatalog& frames, const PlanDistribution& plans) {
  json symbols = json::array();
  json productions = json::array();
  for (std::size_t l = 0; l < plans.symbols.size(); ++l) {
    json row = json::object();
    for (std::size_t x = 0; x < plans.symbols[l].size(); ++x) {
      row[g.name(g.nonterminals()[x])] = plans.symbols[l][x];
    }
    symbols.push_back(std::move(row));
    json prow = json::object();
    for (std::size_t i = 0; i < plans.frames[l].size(); ++i) {
      if (plans.frames[l][i] == 0.0) continue;
      prow[g.frame_label(frames.production(i), frames.cursor(i))] = plans.frames[l][i];
    }
    productions.push_back(std::move(prow));
  }
  json terminals = json::object();
  for (std::size_t x = 0; x < plans.terminals.size(); ++x) {
    terminals[g.name(g.terminals()[x])] = plans.terminals[x];
  }
  return {{"time", plans.time},
          {"symbols", std::move(symbols)},
          {"productions", std::move(productions)},
          {"terminals", std::move(terminals)},
          {"completed", plans.completed}};
}

json report_to_json(const Psdg& g, const FrameCatalog& frames, const StepReport& report) {
  json states = json::object();
  std::vector<std::vector<double>> marginal(g.features().size());
  for (std::size_t f = 0; f < marginal.size(); ++f) marginal[f].assign(g.features()[f].values.size(), 0.0);
  for (std::size_t i = 0; i < report.state_posterior.size(); ++i) {
    const auto q = report.support.member(i);
    const double p = report.state_posterior[i];
    states[g.state_label(q)] = p;
    for (std::size_t f = 0; f < marginal.size(); ++f) marginal[f][q.values[f]] += p;
  }
  json features = json::object();
  for (std::size_t f = 0; f < marginal.size(); ++f) {
    json row = json::object();
    for (std::size_t v = 0; v < marginal[f].size(); ++v) row[g.features()[f].values[v]] = marginal[f][v];
    features[g.features()[f].name] = std::move(row);
  }
  json out = {{"t", report.time},
              {"evidence", report.evidence},
              {"log_evidence", report.log_evidence},
              {"state_posterior", std::move(states)},
              {"features", std::move(features)}};
  if (report.reinitialized) out["reinitialized"] = true;
  if (report.explanation) out["explain"] = plans_to_json(g, frames, *report.explanation);
  out["predict"] = plans_to_json(g, frames, report.prediction);
  return out;
}

}  // namespace psdg
