#include "psdg/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "psdg/error.hpp"
#include "psdg/generation.hpp"
#include "psdg/grammar_io.hpp"
#include "psdg/inference.hpp"
#include "psdg/json_io.hpp"
#include "psdg/oracle.hpp"
#include "psdg/pcfg.hpp"

namespace psdg::cli {

namespace {

using nlohmann::json;

constexpr double kOracleTolerance = 1e-9;

enum class Format { Jsonl, Text };

struct Config {
  std::string grammar;
  Format format = Format::Jsonl;
  std::size_t horizon = 10;
  std::uint64_t seed = 0;
  std::size_t count = 1;
  bool observations_only = false;
  std::uint64_t support_bound = 4096;
  std::string on_zero_evidence = "error";
  std::string observations;
  std::size_t streams = 5;
  std::string out_path;
  double debug_perturbation = 0.0;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int cmd_validate(const Config& c, std::ostream& out) {
  const auto g = load_grammar_file(c.grammar);
  json s = {{"valid", true},
            {"nonterminals", g.nonterminals().size()},
            {"terminals", g.terminals().size()},
            {"productions", g.productions().size()},
            {"depth", g.max_depth()},
            {"max_rhs", g.max_length()},
            {"states", g.state_space().size()}};
  if (c.format == Format::Jsonl) {
    out << s.dump() << '\n';
  } else {
    out << "valid: |N|=" << g.nonterminals().size() << " |Sigma|=" << g.terminals().size()
        << " |P|=" << g.productions().size() << " d=" << g.max_depth() << " m=" << g.max_length()
        << " |Q|=" << g.state_space().size() << '\n';
  }
  return kOk;
}

std::string stack_text(const Psdg& g, const ExpansionStack& s) {
  std::string out;
  for (const auto& f : s.frames) {
    out += g.name(f.symbol) + "<" + g.frame_label(f.production, f.cursor) + "> ";
  }
  return out + "| " + g.name(s.leaf);
}

int cmd_sample(const Config& c, std::ostream& out) {
  if (c.observations_only && c.count != 1) {
    throw FormatError("--observations-only emits a single stream; use --count 1");
  }
  const auto g = load_grammar_file(c.grammar);
  for (std::size_t k = 0; k < c.count; ++k) {
    SampleOptions opts;
    opts.horizon = c.horizon;
    opts.seed = c.seed + k;
    const auto tr = sample_trajectory(g, opts);
    if (c.observations_only) {
      out << observation_json(g, 0, tr.initial).dump() << '\n';
      for (std::size_t t = 1; t <= tr.steps.size(); ++t) {
        out << observation_json(g, t, tr.steps[t - 1].state).dump() << '\n';
      }
      continue;
    }
    if (c.format == Format::Jsonl) {
      out << trajectory_header_json(g, tr, k).dump() << '\n';
      for (std::size_t t = 1; t <= tr.steps.size(); ++t) out << trajectory_step_json(g, tr, t, k).dump() << '\n';
    } else {
      out << "trajectory " << k << " seed " << tr.seed << (tr.completed ? " (completed)" : "")
          << "\n  t=0 " << g.state_label(tr.initial) << '\n';
      for (std::size_t t = 1; t <= tr.steps.size(); ++t) {
        out << "  t=" << t << ' ' << stack_text(g, tr.steps[t - 1].stack) << " -> "
            << g.state_label(tr.steps[t - 1].state) << '\n';
      }
    }
  }
  return kOk;
}

std::string plans_text(const Psdg& g, const PlanDistribution& p) {
  std::string out;
  for (std::size_t l = 0; l < p.symbols.size(); ++l) {
    std::size_t best = 0;
    for (std::size_t x = 1; x < p.symbols[l].size(); ++x) {
      if (p.symbols[l][x] > p.symbols[l][best]) best = x;
    }
    if (p.symbols[l].empty() || p.symbols[l][best] == 0.0) continue;
    out += " L" + std::to_string(l + 1) + "=" + g.name(g.nonterminals()[best]) + ":" + fmt(p.symbols[l][best]);
  }
  std::size_t best = 0;
  for (std::size_t x = 1; x < p.terminals.size(); ++x) {
    if (p.terminals[x] > p.terminals[best]) best = x;
  }
  if (!p.terminals.empty()) out += " sigma=" + g.name(g.terminals()[best]) + ":" + fmt(p.terminals[best]);
  if (p.completed > 0.0) out += " completed:" + fmt(p.completed);
  return out;
}

int cmd_infer(const Config& c, std::istream& in, std::ostream& out, std::ostream& err) {
  const auto g = load_grammar_file(c.grammar);
  if (c.on_zero_evidence != "error" && c.on_zero_evidence != "reinit") {
    throw FormatError("--on-zero-evidence must be error or reinit");
  }
  InferenceOptions opts;
  opts.support_bound = c.support_bound;
  const auto policy = c.on_zero_evidence == "reinit" ? ZeroEvidencePolicy::Reinit : ZeroEvidencePolicy::Error;
  OnlineRecognizer rec(g, opts, policy);
  const FrameCatalog frames(g);

  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Observation obs;
    try {
      obs = parse_observation_line(g, line);
    } catch (const FormatError& e) {
      throw FormatError("line " + std::to_string(number) + ": " + e.what());
    }
    StepReport r;
    try {
      r = rec.observe(obs);
    } catch (const std::invalid_argument& e) {
      throw FormatError("line " + std::to_string(number) + ": " + e.what());
    } catch (const ZeroEvidence& e) {
      err << json{{"error", "zero-evidence"}, {"line", number}, {"message", e.what()}}.dump() << '\n';
      return kZeroEvidence;
    }
    if (r.reinitialized) {
      err << json{{"warning", "zero-evidence"}, {"line", number}, {"message", "belief reinitialized"}}.dump() << '\n';
    }
    if (c.format == Format::Jsonl) {
      out << report_to_json(g, frames, r).dump() << '\n';
    } else {
      out << "t=" << r.time << " evidence=" << fmt(r.evidence) << " log_evidence=" << fmt(r.log_evidence);
      if (r.explanation) out << " | explain" << plans_text(g, *r.explanation);
      out << " | predict" << plans_text(g, r.prediction) << '\n';
    }
    out.flush();
  }
  return kOk;
}

std::vector<std::vector<Observation>> read_streams(const Psdg& g, const Config& c) {
  std::vector<std::vector<Observation>> streams;
  if (!c.observations.empty()) {
    std::ifstream f(c.observations);
    if (!f) throw IoError("cannot read " + c.observations);
    std::vector<Observation> stream;
    std::string line;
    std::size_t number = 0;
    while (std::getline(f, line)) {
      ++number;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        stream.push_back(parse_observation_line(g, line));
      } catch (const FormatError& e) {
        throw FormatError(c.observations + ":" + std::to_string(number) + ": " + e.what());
      }
    }
    streams.push_back(std::move(stream));
    return streams;
  }
  // Sampled streams: every feature pinned except one, which rotates.
  const auto nf = g.features().size();
  for (std::size_t k = 0; k < c.streams; ++k) {
    SampleOptions opts;
    opts.horizon = c.horizon;
    opts.seed = c.seed + k;
    const auto tr = sample_trajectory(g, opts);
    std::vector<Observation> stream;
    for (std::size_t t = 1; t <= tr.steps.size(); ++t) {
      std::vector<std::vector<FeatureValue>> allowed;
      for (std::size_t f = 0; f < nf; ++f) {
        if (f == (k + t) % nf) {
          std::vector<FeatureValue> all;
          for (std::size_t v = 0; v < g.features()[f].values.size(); ++v) all.push_back(static_cast<FeatureValue>(v));
          allowed.push_back(std::move(all));
        } else {
          allowed.push_back({tr.steps[t - 1].state.values[f]});
        }
      }
      stream.push_back({t, StateSet(std::move(allowed))});
    }
    streams.push_back(std::move(stream));
  }
  return streams;
}

int cmd_oracle_check(const Config& c, std::ostream& out) {
  const auto g = load_grammar_file(c.grammar);
  InferenceOptions opts;
  opts.support_bound = c.support_bound;
  opts.debug_perturbation = c.debug_perturbation;
  double worst = 0.0;
  std::size_t steps = 0;
  const auto streams = read_streams(g, c);
  if (c.format == Format::Text) out << "stream     t   evidence      state    explain    predict\n";
  for (std::size_t k = 0; k < streams.size(); ++k) {
    const auto reference = reference_reports(g, streams[k]);
    OnlineRecognizer rec(g, opts);
    for (std::size_t i = 0; i < streams[k].size(); ++i) {
      const auto actual = rec.observe(streams[k][i]);
      const auto d = compare_reports(actual, reference[i]);
      worst = std::max(worst, d.max());
      ++steps;
      if (c.format == Format::Jsonl) {
        out << json{{"stream", k},
                    {"t", actual.time},
                    {"evidence", std::max(d.evidence, d.log_evidence)},
                    {"state", d.state},
                    {"explain", d.explanation},
                    {"predict", d.prediction}}
                   .dump()
            << '\n';
      } else {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%6zu %5zu %10.2e %10.2e %10.2e %10.2e\n", k, actual.time,
                      std::max(d.evidence, d.log_evidence), d.state, d.explanation, d.prediction);
        out << buf;
      }
    }
  }
  const bool pass = worst <= kOracleTolerance;
  if (c.format == Format::Jsonl) {
    out << json{{"steps", steps}, {"max_deviation", worst}, {"tolerance", kOracleTolerance}, {"pass", pass}}.dump()
        << '\n';
  } else {
    out << (pass ? "PASS" : "FAIL") << " max deviation " << fmt(worst) << " over " << steps
        << " steps (tolerance " << fmt(kOracleTolerance) << ")\n";
  }
  return pass ? kOk : kModelError;
}

int cmd_to_pcfg(const Config& c, std::ostream& out, std::ostream& err) {
  const auto g = load_grammar_file(c.grammar);
  const auto pcfg = to_pcfg(g);
  const auto text = pcfg.to_text(g);
  if (c.out_path.empty()) {
    out << text;
  } else {
    std::ofstream f(c.out_path);
    if (!f || !(f << text)) throw IoError("cannot write " + c.out_path);
  }
  const double nq = static_cast<double>(g.state_space().size());
  const double bound = std::pow(nq, static_cast<double>(g.max_length() + 1));
  const double ratio = static_cast<double>(pcfg.tuple_production_count()) /
                       static_cast<double>(g.productions().size());
  err << "tuple symbols " << pcfg.count(Pcfg::Kind::Tuple) << " (bound |N||Q|^2 = "
      << fmt(static_cast<double>(g.nonterminals().size()) * nq * nq) << "), preterminals "
      << pcfg.count(Pcfg::Kind::Preterminal) << ", tuple productions " << pcfg.tuple_production_count()
      << " for " << g.productions().size() << " PSDG productions: ratio " << fmt(ratio)
      << " vs |Q|^(m+1) = " << fmt(bound) << '\n';
  return kOk;
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message) {
  err << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  Config c;
  CLI::App app{"Probabilistic state-dependent grammars: sampling, recognition and checks", "psdg"};
  app.require_subcommand(1);
  std::string format = "jsonl";
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"jsonl", "text"}));

  auto* validate_cmd = app.add_subcommand("validate", "Check a grammar file and print its statistics");
  auto* sample = app.add_subcommand("sample", "Sample trajectories");
  auto* infer = app.add_subcommand("infer", "Online recognition over an observation stream on stdin");
  auto* oracle = app.add_subcommand("oracle-check", "Compare the recognizer with exact enumeration");
  auto* pcfg = app.add_subcommand("to-pcfg", "Write the equivalent state-annotated PCFG");
  for (auto* sub : {validate_cmd, sample, infer, oracle, pcfg}) {
    sub->add_option("file", c.grammar, "Grammar file")->required();
    sub->fallthrough();
  }
  sample->add_option("--horizon", c.horizon, "Maximum number of steps")->check(CLI::PositiveNumber);
  sample->add_option("--seed", c.seed, "Seed of the first trajectory");
  sample->add_option("--count", c.count, "Number of trajectories (seeds seed, seed+1, ...)")
      ->check(CLI::PositiveNumber);
  sample->add_flag("--observations-only", c.observations_only, "Emit the observation stream instead");

  infer->add_option("--support-bound", c.support_bound, "Largest state set a belief may span")
      ->check(CLI::PositiveNumber);
  infer->add_option("--on-zero-evidence", c.on_zero_evidence, "error or reinit")
      ->check(CLI::IsMember({"error", "reinit"}));

  oracle->add_option("--horizon", c.horizon, "Length of sampled streams")->check(CLI::PositiveNumber);
  oracle->add_option("--seed", c.seed, "Seed of the first sampled stream");
  oracle->add_option("--streams", c.streams, "Number of sampled streams")->check(CLI::PositiveNumber);
  oracle->add_option("--observations", c.observations, "Observation stream file instead of sampling");
  oracle->add_option("--support-bound", c.support_bound, "Largest state set a belief may span")
      ->check(CLI::PositiveNumber);
  oracle->add_option("--debug-perturb", c.debug_perturbation)->group("");

  pcfg->add_option("--out", c.out_path, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? kOk : kInputError;
  }
  c.format = format == "text" ? Format::Text : Format::Jsonl;
  if (oracle->parsed() && oracle->count("--horizon") == 0) c.horizon = 4;

  try {
    if (validate_cmd->parsed()) return cmd_validate(c, out);
    if (sample->parsed()) return cmd_sample(c, out);
    if (infer->parsed()) return cmd_infer(c, in, out, err);
    if (oracle->parsed()) return cmd_oracle_check(c, out);
    if (pcfg->parsed()) return cmd_to_pcfg(c, out, err);
  } catch (const ValidationError& e) {
    for (const auto& d : e.diagnostics()) {
      err << json{{"error", "validation"},
                  {"kind", to_string(d.kind)},
                  {"message", d.message},
                  {"line", d.line},
                  {"column", d.column}}
                 .dump()
          << '\n';
    }
    return kModelError;
  } catch (const ParseError& e) {
    err << json{{"error", "parse"}, {"message", e.what()}, {"line", e.line()}, {"column", e.column()}}.dump()
        << '\n';
    return kInputError;
  } catch (const IoError& e) {
    report_error(err, "io", e.what());
    return kInputError;
  } catch (const FormatError& e) {
    report_error(err, "format", e.what());
    return kInputError;
  } catch (const ZeroEvidence& e) {
    report_error(err, "zero-evidence", e.what());
    return kZeroEvidence;
  } catch (const Error& e) {
    report_error(err, "model", e.what());
    return kModelError;
  } catch (const std::invalid_argument& e) {
    report_error(err, "format", e.what());
    return kInputError;
  }
  return kInputError;
}

}  // namespace psdg::cli
