#pragma once
// Command-line workflows: fit, evaluate, sample, ensemble.

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tramsurv/core.hpp"
#include "tramsurv/fit.hpp"
#include "tramsurv/sample.hpp"

namespace tramsurv::cli {

struct RunConfig {
  std::string command;  // fit | evaluate | sample | ensemble
  std::filesystem::path data;
  std::filesystem::path spec;   // optional flat config file
  std::filesystem::path model;
  std::filesystem::path out;
  nlohmann::json settings = nlohmann::json::object();  // resolved flat key space
};

/// Every recognised key with its default. lr_extractor / lr_head default to
/// null, meaning the per-(parameterization, family) table values.
nlohmann::json default_settings();

/// defaults <- file <- overrides. Unknown keys throw InvalidArgument.
nlohmann::json resolve_settings(const nlohmann::json& file, const nlohmann::json& overrides);

ModelSpec model_spec_from_settings(const nlohmann::json& settings, std::size_t input_dim);
TrainConfig train_config_from_settings(const nlohmann::json& settings);
SynthConfig synth_config_from_settings(const nlohmann::json& settings);

/// Runs one workflow, writing its artifacts under config.out. Throws Error.
void run(const RunConfig& config);

/// argv front end. Prints a JSON error record on stderr and returns nonzero
/// on failure.
int main_entry(int argc, const char* const* argv);

}  // namespace tramsurv::cli
