#include "tramsurv/cli.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "tramsurv/basis.hpp"
#include "tramsurv/error.hpp"
#include "tramsurv/io.hpp"
#include "tramsurv/kernels.hpp"
#include "tramsurv/log.hpp"
#include "tramsurv/metrics.hpp"

namespace tramsurv::cli {

using nlohmann::json;
namespace fs = std::filesystem;

json default_settings() {
  return json{
      {"family", "logistic"},
      {"parameterization", "bernstein_shift"},
      {"bernstein_order", kDefaultBernsteinOrder},
      {"hidden_dims", json::array()},
      {"output_dim", 1},
      {"activation", "tanh"},
      {"init_scale", 1.0},
      {"lr_extractor", nullptr},
      {"lr_head", nullptr},
      {"epochs", 200},
      {"batch_size", 32},
      {"early_stopping_patience", 20},
      {"validation_fraction", 0.2},
      {"seed", 0},
      {"momentum", 0.0},
      {"clip_norm", 10.0},
      {"replication", 10},
      {"censor_at_max", true},
      {"members", 10},
      {"top", 5},
      {"jobs", 1},
  };
}

json resolve_settings(const json& file, const json& overrides) {
  json s = default_settings();
  for (const json* layer : {&file, &overrides}) {
    if (layer->is_null()) continue;
    if (!layer->is_object()) throw Error(ErrorCode::InvalidArgument, "config must be a flat object");
    for (const auto& [k, v] : layer->items()) {
      if (!s.contains(k)) throw Error(ErrorCode::InvalidArgument, "unknown config key '" + k + "'");
      s[k] = v;
    }
  }
  return s;
}

namespace {

template <class T>
T get(const json& s, const char* key) {
  try {
    return s.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidArgument, std::string("config key '") + key + "' has a bad value");
  }
}

}  // namespace

ModelSpec model_spec_from_settings(const json& s, std::size_t input_dim) {
  ModelSpec spec;
  spec.family = family_from_string(get<std::string>(s, "family"));
  spec.parameterization = parameterization_from_string(get<std::string>(s, "parameterization"));
  spec.bernstein_order = get<int>(s, "bernstein_order");
  spec.extractor.input_dim = input_dim;
  spec.extractor.hidden_dims = get<std::vector<std::size_t>>(s, "hidden_dims");
  spec.extractor.output_dim = spec.parameterization == Parameterization::BernsteinFlexible
                                  ? static_cast<std::size_t>(spec.bernstein_order) + 1
                                  : get<std::size_t>(s, "output_dim");
  spec.extractor.activation = activation_from_string(get<std::string>(s, "activation"));
  spec.extractor.init_scale = get<double>(s, "init_scale");
  const LearningRates lr = default_learning_rates(spec.parameterization, spec.family);
  spec.lr_extractor = s.at("lr_extractor").is_null() ? lr.extractor : get<double>(s, "lr_extractor");
  spec.lr_head = s.at("lr_head").is_null() ? lr.head : get<double>(s, "lr_head");
  spec.epochs = get<int>(s, "epochs");
  spec.early_stopping_patience = get<int>(s, "early_stopping_patience");
  spec.seed = get<std::uint64_t>(s, "seed");
  validate_spec(spec);
  return spec;
}

TrainConfig train_config_from_settings(const json& s) {
  TrainConfig c;
  c.epochs = get<int>(s, "epochs");
  c.batch_size = get<std::size_t>(s, "batch_size");
  c.early_stopping_patience = get<int>(s, "early_stopping_patience");
  c.validation_fraction = get<double>(s, "validation_fraction");
  c.seed = get<std::uint64_t>(s, "seed");
  c.momentum = get<double>(s, "momentum");
  c.clip_norm = get<double>(s, "clip_norm");
  return c;
}

SynthConfig synth_config_from_settings(const json& s) {
  SynthConfig c;
  c.replication = get<std::size_t>(s, "replication");
  c.censor_at_max = get<bool>(s, "censor_at_max");
  c.seed = get<std::uint64_t>(s, "seed");
  return c;
}

// ---------------------------------------------------------------------------

namespace {

std::string dump(const json& j) { return j.dump(2) + "\n"; }

FittedModel load_model(const fs::path& path) {
  return deserialize_model(read_file(path, ErrorCode::ModelNotFound));
}

// A model path holds either one artifact or an ensemble document.
json load_model_document(const fs::path& path) {
  const std::string text = read_file(path, ErrorCode::ModelNotFound);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedArtifact, std::string("model artifact: ") + e.what());
  }
}

EnsembleModel ensemble_from_json(const json& doc) {
  EnsembleModel e;
  for (const auto& m : doc.at("members")) e.members.push_back(deserialize_model(m.dump()));
  e.member_validation_nlls = doc.at("member_validation_nlls").get<std::vector<double>>();
  if (e.members.empty()) throw Error(ErrorCode::MalformedArtifact, "ensemble has no members");
  return e;
}

json ensemble_to_json(const EnsembleModel& e) {
  json members = json::array();
  for (const auto& m : e.members) members.push_back(json::parse(serialize_model(m)));
  return json{{"schema_version", kSchemaVersion},
              {"members", std::move(members)},
              {"member_validation_nlls", e.member_validation_nlls}};
}

SurvivalDataset load_data(const fs::path& path, ValidationMode mode) {
  return validate_dataset(parse_dataset_csv(path), mode);
}

void write_manifest(const RunConfig& c) {
  json inputs = json::object();
  if (!c.data.empty()) inputs["data"] = c.data.string();
  if (!c.spec.empty()) inputs["spec"] = c.spec.string();
  if (!c.model.empty()) inputs["model"] = c.model.string();
  const json m{{"command", c.command},
               {"schema_version", kSchemaVersion},
               {"inputs", inputs},
               {"settings", c.settings},
               {"seed", c.settings.at("seed")},
               {"kernel_isa", kernels::isa_name(kernels::active_isa())}};
  write_file(c.out / "manifest.json", dump(m));
}

std::string training_log_csv(const FitResult& r) {
  std::string s = "epoch,train_nll,val_nll,grad_norm,clipped\n";
  for (const auto& e : r.history) {
    s += std::to_string(e.epoch) + "," + format_double(e.train_nll) + "," +
         format_double(e.validation_nll) + "," + format_double(e.grad_norm) + "," +
         std::to_string(e.clipped) + "\n";
  }
  return s;
}

template <class MakeDist>
void write_evaluation(const RunConfig& c, const EvaluationReport& report,
                      const SurvivalDataset& data, const LogTimeScaler& scaler, MakeDist&& make) {
  write_file(c.out / "report.json", dump(report_to_json(report)));

  std::string scores = "subject,time,time2,status,nll,crps,risk\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& o = data.observations[i];
    const auto& s = report.per_subject[i];
    scores += std::to_string(i) + "," + format_double(o.time_lower) + "," +
              (o.censoring == CensoringKind::Interval ? format_double(o.time_upper) : "") + "," +
              std::string(to_string(o.censoring)) + "," + format_double(s.nll) + "," +
              (s.crps ? format_double(*s.crps) : "") + "," + format_double(s.risk) + "\n";
  }
  write_file(c.out / "scores.csv", scores);

  constexpr int kGrid = 200;
  std::string grid = "subject,time,cdf\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto dist = make(data.observations[i].covariates);
    for (int g = 0; g < kGrid; ++g) {
      const double v = scaler.a_lo + scaler.width() * g / (kGrid - 1);
      const double t = std::exp(v);
      grid += std::to_string(i) + "," + format_double(t) + "," + format_double(dist.cdf(t)) + "\n";
    }
  }
  write_file(c.out / "cdf_grid.csv", grid);
}

void run_fit(const RunConfig& c) {
  const SurvivalDataset data = load_data(c.data, ValidationMode::Fitting);
  const ModelSpec spec = model_spec_from_settings(c.settings, data.num_features());
  TrainConfig cfg = train_config_from_settings(c.settings);
  cfg.lr_extractor = spec.lr_extractor;
  cfg.lr_head = spec.lr_head;
  const LogTimeScaler scaler = fit_scaler(data);
  const Split split = validation_split(data.size(), cfg.validation_fraction, cfg.seed);
  const FitResult r = fit_split(data, spec, cfg, split, scaler);
  write_file(c.out / "model.json", serialize_model(r.model));
  write_file(c.out / "training_log.csv", training_log_csv(r));
  write_file(c.out / "train_split.csv", dataset_to_csv(data.subset(split.train)));
  write_file(c.out / "validation_split.csv", dataset_to_csv(data.subset(split.validation)));
  logger().info("fit: best epoch {} train_nll={} val_nll={}", r.best_epoch, r.model.train_nll,
                r.model.validation_nll);
}

void run_evaluate(const RunConfig& c) {
  const json doc = load_model_document(c.model);
  const SurvivalDataset data = load_data(c.data, ValidationMode::Scoring);
  if (doc.is_object() && doc.contains("members")) {
    EnsembleModel e;
    try {
      e = ensemble_from_json(doc);
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::MalformedArtifact, std::string("ensemble: ") + ex.what());
    }
    const EvaluationReport report = evaluate(e, data);
    write_evaluation(c, report, data, e.members.front().scaler,
                     [&](const std::vector<double>& x) { return ensemble_distribution(e, x); });
  } else {
    const FittedModel m = deserialize_model(doc.dump());
    const EvaluationReport report = evaluate(m, data);
    write_evaluation(c, report, data, m.scaler,
                     [&](const std::vector<double>& x) { return conditional_distribution(m, x); });
  }
}

void run_sample(const RunConfig& c) {
  const FittedModel m = load_model(c.model);
  const SurvivalDataset data = load_data(c.data, ValidationMode::Scoring);
  const SurvivalDataset synth = generate_semisynthetic(m, data, synth_config_from_settings(c.settings));
  write_file(c.out / "synthetic.csv", dataset_to_csv(synth));
}

void run_ensemble(const RunConfig& c) {
  const SurvivalDataset data = load_data(c.data, ValidationMode::Fitting);
  const ModelSpec spec = model_spec_from_settings(c.settings, data.num_features());
  TrainConfig cfg = train_config_from_settings(c.settings);
  cfg.lr_extractor = spec.lr_extractor;
  cfg.lr_head = spec.lr_head;
  const auto b = get<std::size_t>(c.settings, "members");
  const auto m = get<std::size_t>(c.settings, "top");
  const auto jobs = get<std::size_t>(c.settings, "jobs");
  const EnsembleResult r = fit_ensemble(data, spec, cfg, b, m, jobs);

  json candidates = json::array();
  for (const auto& cand : r.candidates) {
    char name[32];
    std::snprintf(name, sizeof name, "member_%03zu.json", cand.member);
    write_file(c.out / "members" / name, serialize_model(r.fits[cand.member].model));
    candidates.push_back({{"member", cand.member},
                          {"seed", cand.seed},
                          {"validation_nll", cand.validation_nll},
                          {"selected", cand.selected},
                          {"artifact", std::string("members/") + name}});
  }
  write_file(c.out / "selection.json",
             dump(json{{"members", b}, {"top", m}, {"candidates", std::move(candidates)}}));
  write_file(c.out / "ensemble.json", dump(ensemble_to_json(r.ensemble)));
  write_file(c.out / "report.json", dump(report_to_json(evaluate(r.ensemble, data))));
}

}  // namespace

void run(const RunConfig& c) {
  if (c.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
  if (c.data.empty()) throw Error(ErrorCode::DataNotFound, "--data is required");
  if ((c.command == "evaluate" || c.command == "sample") && c.model.empty()) {
    throw Error(ErrorCode::ModelNotFound, "--model is required");
  }
  fs::create_directories(c.out);
  if (c.command == "fit") {
    run_fit(c);
  } else if (c.command == "evaluate") {
    run_evaluate(c);
  } else if (c.command == "sample") {
    run_sample(c);
  } else if (c.command == "ensemble") {
    run_ensemble(c);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown command '" + c.command + "'");
  }
  write_manifest(c);
}

// ---------------------------------------------------------------------------

namespace {

// Flag text to JSON: numbers, booleans and lists parse as JSON, anything else
// is taken as a string. "16,16" is accepted for lists.
json flag_value(const std::string& key, const std::string& text) {
  if (key == "hidden_dims") {
    const std::string body = text.empty() || text.front() == '[' ? text : "[" + text + "]";
    try {
      return json::parse(body);
    } catch (const json::exception&) {
      throw Error(ErrorCode::InvalidArgument, "--hidden_dims expects a list such as 16,16");
    }
  }
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return text;
  }
}

void print_error(const Error& e) {
  json rec{{"code", error_code_name(e.code())}, {"message", e.what()}};
  if (e.index()) rec["index"] = *e.index();
  std::cerr << json{{"error", rec}}.dump() << "\n";
}

}  // namespace

int main_entry(int argc, const char* const* argv) {
  CLI::App app{"Survival regression with deep conditional transformation models"};
  app.require_subcommand(1);
  RunConfig config;
  std::map<std::string, std::string> flags;
  std::map<std::string, std::vector<CLI::Option*>> options;
  std::string data, spec, model, out;

  const json defaults = default_settings();
  const std::map<std::string, std::string> help{
      {"fit", "train one model"},
      {"evaluate", "score a model or ensemble on a dataset"},
      {"sample", "draw a semi-synthetic dataset from a model"},
      {"ensemble", "train B bootstrap members and keep the best M"}};
  for (const auto& [name, desc] : help) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--data", data, "dataset CSV");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--spec", spec, "flat JSON config file");
    if (name == "evaluate" || name == "sample") sub->add_option("--model", model, "model artifact");
    for (const auto& [key, value] : defaults.items()) {
      options[key].push_back(sub->add_option("--" + key, flags[key]));
    }
    sub->callback([&config, sub] { config.command = sub->get_name(); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    config.data = data;
    config.spec = spec;
    config.model = model;
    config.out = out;
    json file = json::object();
    if (!spec.empty()) {
      const std::string text = read_file(spec, ErrorCode::SpecNotFound);
      try {
        file = json::parse(text);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("spec file: ") + e.what());
      }
    }
    json overrides = json::object();
    for (const auto& [key, opts] : options) {
      for (const CLI::Option* o : opts) {
        if (o->count() > 0) overrides[key] = flag_value(key, flags[key]);
      }
    }
    config.settings = resolve_settings(file, overrides);
    run(config);
  } catch (const Error& e) {
    print_error(e);
    return 1;
  } catch (const fs::filesystem_error& e) {
    print_error(Error(ErrorCode::IoError, e.what()));
    return 1;
  } catch (const std::exception& e) {
    print_error(Error(ErrorCode::InvalidArgument, e.what()));
    return 1;
  }
  return 0;
}

}  // namespace tramsurv::cli
