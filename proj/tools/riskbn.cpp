// riskbn: generate, ingest, analyse, build, evaluate and serve AF risk models.

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "riskbn/bn/serialize.hpp"
#include "riskbn/builder/build.hpp"
#include "riskbn/error.hpp"
#include "riskbn/eval/evaluation.hpp"
#include "riskbn/explain/explain.hpp"
#include "riskbn/knowledge/model.hpp"
#include "riskbn/pipeline/cohort.hpp"
#include "riskbn/pipeline/records.hpp"
#include "riskbn/service/service.hpp"
#include "riskbn/stats/association.hpp"
#include "riskbn/synth/generator.hpp"

namespace fs = std::filesystem;
using namespace riskbn;

namespace {

#ifdef RISKBN_DATA_DIR
const std::string kDataDir = RISKBN_DATA_DIR;
#else
const std::string kDataDir = "data";
#endif

struct Common {
  std::string knowledge = kDataDir + "/af_knowledge.json";
  std::string mapping = kDataDir + "/icd_mapping.json";
};

void add_knowledge(CLI::App* cmd, Common& c) {
  cmd->add_option("--knowledge", c.knowledge, "Knowledge model JSON")->check(CLI::ExistingFile)->capture_default_str();
}

void add_mapping(CLI::App* cmd, Common& c) {
  cmd->add_option("--mapping", c.mapping, "ICD mapping and feature cut-offs JSON")
      ->check(CLI::ExistingFile)
      ->capture_default_str();
}

// Writes to a file, or stdout when the path is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_file(path, text);
  }
}

CohortTable load_cohort(const std::string& path, const KnowledgeModel& model) {
  return read_cohort_csv(read_text_file(path), model);
}

Evidence parse_evidence(const std::string& text) {
  Evidence ev;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    const std::string item = text.substr(start, end - start);
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ValidationError({"evidence: '" + item + "' is not factor=state"});
    }
    ev[item.substr(0, eq)] = item.substr(eq + 1);
    start = end + 1;
  }
  return ev;
}

// Recreates the held-out rows a model was not trained on.
CohortTable held_out(const CohortTable& cohort, const Provenance& prov) {
  const auto parts = split(cohort, {prov.training.train_fraction, prov.training.split_seed, prov.training.stratified});
  if (static_cast<Index>(parts.train.rows.size()) != prov.training.n_train) {
    throw ValidationError({"eval: cohort does not reproduce the training split (expected " +
                           std::to_string(prov.training.n_train) + " training rows, got " +
                           std::to_string(parts.train.rows.size()) + ")"});
  }
  return parts.test;
}

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian-network risk models for atrial fibrillation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  Common common;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate synthetic raw records and the matching cohort");
  std::string spec_path = kDataDir + "/generator_af.json";
  std::string synth_out;
  std::optional<std::uint64_t> synth_seed;
  std::optional<Index> synth_n;
  synth->add_option("--spec", spec_path, "Generator spec JSON")->check(CLI::ExistingFile)->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory (raw/ and cohort.csv)")->required();
  synth->add_option("--seed", synth_seed, "Override the generator seed");
  synth->add_option("-n,--patients", synth_n, "Override the patient count");
  add_knowledge(synth, common);
  add_mapping(synth, common);

  // cohort
  auto* cohort = app.add_subcommand("cohort", "Select patients and extract features from raw tables");
  std::string raw_dir, cohort_out;
  std::uint64_t cohort_seed = 0;
  cohort->add_option("--raw", raw_dir, "Directory with visits, measurements, ecg and patients CSV")
      ->required()
      ->check(CLI::ExistingDirectory);
  cohort->add_option("--out", cohort_out, "Cohort CSV (default stdout)");
  cohort->add_option("--seed", cohort_seed, "Undersampling seed")->capture_default_str();
  add_knowledge(cohort, common);
  add_mapping(cohort, common);

  // stats
  auto* stats = app.add_subcommand("stats", "Chi-square and Cramer's V per factor");
  std::string stats_cohort, stats_out, stats_format = "csv";
  stats->add_option("--cohort", stats_cohort, "Cohort CSV")->required()->check(CLI::ExistingFile);
  stats->add_option("--out", stats_out, "Report file (default stdout)");
  stats->add_option("--format", stats_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  add_knowledge(stats, common);

  // build
  auto* buildc = app.add_subcommand("build", "Split a cohort and build a model on the training part");
  std::string build_cohort_path, build_out, mode_name = "hybrid";
  BuildConfig cfg;
  bool unstratified = false;
  std::vector<std::string> overrides;
  buildc->add_option("--cohort", build_cohort_path, "Cohort CSV")->required()->check(CLI::ExistingFile);
  buildc->add_option("--out", build_out, "Model JSON; provenance goes next to it")->required();
  buildc->add_option("--mode", mode_name, "knowledge, data or hybrid")
      ->check(CLI::IsMember({"knowledge", "data", "hybrid"}))
      ->capture_default_str();
  buildc->add_option("--seed", cfg.seed, "Split and search seed")->capture_default_str();
  buildc->add_option("--train-fraction", cfg.training.train_fraction, "Training share")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  buildc->add_flag("--unstratified", unstratified, "Split without preserving label shares");
  buildc->add_option("--alpha", cfg.laplace_alpha, "Laplace pseudo-count")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  buildc->add_option("--max-iterations", cfg.hill_climb.max_iterations, "Hill-climb iterations")
      ->capture_default_str();
  buildc->add_option("--max-parents", cfg.hill_climb.max_parents, "Hill-climb parent limit")->capture_default_str();
  buildc->add_option("--restarts", cfg.hill_climb.restarts, "Hill-climb random restarts")->capture_default_str();
  buildc->add_option("--threshold", overrides, "Synthesis thresholds as node=t1:t2 (repeatable)");
  add_knowledge(buildc, common);

  // eval
  auto* evalc = app.add_subcommand("eval", "Evaluate models on their held-out rows");
  std::vector<std::string> eval_models;
  std::string eval_cohort, eval_out, eval_format = "table", eval_predictions;
  bool eval_all = false;
  evalc->add_option("--model", eval_models, "Model JSON (repeatable)")->required()->check(CLI::ExistingFile);
  evalc->add_option("--cohort", eval_cohort, "Cohort CSV the models were built from")
      ->required()
      ->check(CLI::ExistingFile);
  evalc->add_flag("--all-rows", eval_all, "Score every cohort row instead of the held-out split");
  evalc->add_option("--format", eval_format, "table or json")
      ->check(CLI::IsMember({"table", "json"}))
      ->capture_default_str();
  evalc->add_option("--out", eval_out, "Output file (default stdout)");
  evalc->add_option("--predictions", eval_predictions, "Per-patient predictions JSON");
  add_knowledge(evalc, common);

  // predict
  auto* predictc = app.add_subcommand("predict", "Posterior for one evidence set");
  std::string predict_model, predict_evidence;
  predictc->add_option("--model", predict_model, "Model JSON")->required()->check(CLI::ExistingFile);
  predictc->add_option("--evidence", predict_evidence, "factor=state,factor=state,...");

  // explain
  auto* explainc = app.add_subcommand("explain", "Ranked contributions with citations");
  std::string explain_model, explain_evidence, explain_patient;
  explainc->add_option("--model", explain_model, "Model JSON")->required()->check(CLI::ExistingFile);
  explainc->add_option("--evidence", explain_evidence, "factor=state,factor=state,...");
  explainc->add_option("--patient", explain_patient, "Patient label for the report");
  add_knowledge(explainc, common);

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP API over one model");
  std::string serve_model, serve_ui;
  ServeOptions serve_opts;
  serve->add_option("--model", serve_model, "Model JSON")->envname("MODEL_PATH")->required()->check(CLI::ExistingFile);
  serve->add_option("--knowledge", common.knowledge, "Knowledge model JSON")
      ->envname("KNOWLEDGE_PATH")
      ->check(CLI::ExistingFile)
      ->capture_default_str();
  serve->add_option("--port", serve_opts.port, "TCP port (0 picks one)")->envname("PORT")->capture_default_str();
  serve->add_option("--host", serve_opts.host, "Bind address")->capture_default_str();
  serve->add_option("--ui-dir", serve_ui, "Static UI bundle directory")->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const KnowledgeModel model = load_model_file(common.knowledge);

    if (*synth) {
      GeneratorSpec spec = generator_spec_from_json(read_json_file(spec_path));
      if (synth_seed) spec.seed = *synth_seed;
      if (synth_n) spec.n_patients = *synth_n;
      const auto config = feature_config_from_json(read_json_file(common.mapping));
      const RawFixture fx = generate_raw(spec, model, config);
      write_raw_dir(fs::path(synth_out) / "raw", fx.raw);
      write_text_file(fs::path(synth_out) / "cohort.csv", write_cohort_csv(fx.cohort));
      std::cerr << "synth: " << fx.cohort.rows.size() << " patients (" << fx.cohort.positives()
                << " positive), " << fx.distractors.size() << " distractors\n";
    } else if (*cohort) {
      const auto config = feature_config_from_json(read_json_file(common.mapping));
      const CohortTable table = build_cohort(load_raw_dir(raw_dir), model, config, cohort_seed);
      emit(cohort_out, write_cohort_csv(table));
      std::cerr << "cohort: " << table.rows.size() << " patients (" << table.positives() << " positive)\n";
    } else if (*stats) {
      const auto report = association_report(load_cohort(stats_cohort, model));
      for (const auto& w : report.warnings) std::cerr << "warning: " << w.factor << ": " << w.message << '\n';
      emit(stats_out, stats_format == "csv" ? report_to_csv(report) : dump_json(report_to_json(report)));
    } else if (*buildc) {
      cfg.mode = build_mode_from_string(mode_name);
      cfg.hill_climb.seed = cfg.seed;
      cfg.training.split_seed = cfg.seed;
      cfg.training.stratified = !unstratified;
      for (const auto& o : overrides) {
        const auto eq = o.find('=');
        const auto colon = o.find(':', eq == std::string::npos ? 0 : eq);
        if (eq == std::string::npos || colon == std::string::npos) {
          throw ValidationError({"threshold: '" + o + "' is not node=t1:t2"});
        }
        try {
          cfg.threshold_overrides[o.substr(0, eq)] = {std::stod(o.substr(eq + 1, colon - eq - 1)),
                                                      std::stod(o.substr(colon + 1))};
        } catch (const std::logic_error&) {
          throw ValidationError({"threshold: '" + o + "' has a non-numeric bound"});
        }
      }
      const auto parts = split(load_cohort(build_cohort_path, model),
                               {cfg.training.train_fraction, cfg.seed, cfg.training.stratified});
      const BuiltModel built = build(model, parts.train, cfg);
      save_built_model(built, build_out);
      for (const auto& w : built.provenance.warnings) std::cerr << "warning: " << w << '\n';
      std::cerr << "build: " << to_string(cfg.mode) << " model on " << parts.train.rows.size() << " rows, "
                << parts.test.rows.size() << " held out\n";
    } else if (*evalc) {
      const CohortTable table = load_cohort(eval_cohort, model);
      std::vector<std::pair<std::string, MetricsReport>> rows;
      Json doc = Json::array();
      Json predictions = Json::object();
      for (const auto& path : eval_models) {
        const BuiltModel built = load_built_model(path);
        const Evaluation ev = evaluate(built, eval_all ? table : held_out(table, built.provenance));
        const std::string name = to_string(built.provenance.mode);
        rows.emplace_back(name, ev.metrics);
        doc.push_back({{"model", path}, {"mode", name}, {"metrics", metrics_to_json(ev.metrics)}});
        Json preds = Json::array();
        for (const auto& p : ev.predictions) {
          preds.push_back({{"patient_id", p.patient_id}, {"p_present", p.p_present}, {"label", p.label}});
        }
        predictions[path] = preds;
      }
      emit(eval_out, eval_format == "table" ? format_metrics_table(rows) : dump_json(doc));
      if (!eval_predictions.empty()) write_text_file(eval_predictions, dump_json(predictions));
    } else if (*predictc) {
      const BuiltModel built = load_built_model(predict_model);
      std::cout << dump_json(prediction_json(built, parse_evidence(predict_evidence)));
    } else if (*explainc) {
      const BuiltModel built = load_built_model(explain_model);
      std::cout << dump_json(
          report_to_json(risk_report(built, model, parse_evidence(explain_evidence), explain_patient)));
    } else if (*serve) {
      Service service;
      service.load(load_built_model(serve_model), model);
      if (!serve_ui.empty()) serve_opts.ui_dir = serve_ui;
      HttpServer server(service, serve_opts);
      const int port = server.bind();
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving on http://" << serve_opts.host << ':' << port << '\n';
      server.listen();
      g_server = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << "error [" << e.code() << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
