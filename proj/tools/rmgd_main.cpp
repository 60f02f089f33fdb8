// Command-line front end: train-bits, train-weights, extract, eval, report.
// Exit codes: 0 success, 2 config error, 3 data error, 4 resource cap exceeded.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rmgd/pipeline.hpp"

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> divisions;
  std::optional<std::uint32_t> n_bits;
  std::optional<double> t_c;
  std::optional<int> folds;
  std::optional<std::string> maps;  // comma separated names
  std::optional<int> subgroups;
  std::optional<double> mu1, mu2, gamma;
  std::optional<std::uint64_t> instance_budget;
  std::optional<int> epochs;
  std::optional<std::size_t> train_matches;
  std::optional<double> pair_ratio;
  std::optional<int> patch_size;
  std::optional<int> gaussian_kernel;
  std::optional<double> gaussian_sigma;
  std::optional<std::uint64_t> memory_cap_mb;
  std::optional<std::uint64_t> log_every;
  std::optional<bool> literal_eq2, literal_phi_sign;
};

void add_override_flags(CLI::App& app, Overrides& o) {
  app.add_option("--seed", o.seed);
  app.add_option("--threads", o.threads);
  app.add_option("--divisions", o.divisions);
  app.add_option("--n-bits", o.n_bits);
  app.add_option("--t-c", o.t_c);
  app.add_option("--folds", o.folds);
  app.add_option("--maps", o.maps, "comma-separated map names, e.g. Int,Mag,Chan1");
  app.add_option("--subgroups", o.subgroups);
  app.add_option("--mu1", o.mu1);
  app.add_option("--mu2", o.mu2);
  app.add_option("--gamma", o.gamma);
  app.add_option("--instance-budget", o.instance_budget);
  app.add_option("--epochs", o.epochs);
  app.add_option("--train-matches", o.train_matches);
  app.add_option("--pair-ratio", o.pair_ratio);
  app.add_option("--patch-size", o.patch_size);
  app.add_option("--gaussian-kernel", o.gaussian_kernel);
  app.add_option("--gaussian-sigma", o.gaussian_sigma);
  app.add_option("--memory-cap-mb", o.memory_cap_mb);
  app.add_option("--log-every", o.log_every);
  app.add_flag("--literal-eq2", [&o](std::int64_t) { o.literal_eq2 = true; });
  app.add_flag("--literal-phi-sign", [&o](std::int64_t) { o.literal_phi_sign = true; });
}

rmgd::RunConfig effective_config(const std::string& config_path, const Overrides& o) {
  rmgd::RunConfig cfg;
  if (!config_path.empty()) cfg = rmgd::load_config(config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (o.divisions) cfg.divisions = *o.divisions;
  if (o.n_bits) cfg.n_bits = *o.n_bits;
  if (o.t_c) cfg.t_c = *o.t_c;
  if (o.folds) cfg.folds = *o.folds;
  if (o.maps) {
    cfg.maps.clear();
    std::stringstream ss(*o.maps);
    std::string name;
    while (std::getline(ss, name, ',')) cfg.maps.push_back(rmgd::map_from_name(name));
  }
  if (o.subgroups) cfg.subgroups = *o.subgroups;
  if (o.mu1) cfg.mu1 = *o.mu1;
  if (o.mu2) cfg.mu2 = *o.mu2;
  if (o.gamma) cfg.gamma = *o.gamma;
  if (o.instance_budget) cfg.instance_budget = *o.instance_budget;
  if (o.epochs) cfg.epochs = *o.epochs;
  if (o.train_matches) cfg.train_matches = *o.train_matches;
  if (o.pair_ratio) cfg.pair_ratio = *o.pair_ratio;
  if (o.patch_size) cfg.patch_size = *o.patch_size;
  if (o.gaussian_kernel) cfg.gaussian_kernel = *o.gaussian_kernel;
  if (o.gaussian_sigma) cfg.gaussian_sigma = *o.gaussian_sigma;
  if (o.memory_cap_mb) cfg.memory_cap_mb = *o.memory_cap_mb;
  if (o.log_every) cfg.log_every = *o.log_every;
  if (o.literal_eq2) cfg.literal_eq2 = *o.literal_eq2;
  if (o.literal_phi_sign) cfg.literal_phi_sign = *o.literal_phi_sign;
  cfg.validate();
  return cfg;
}

std::string provenance_comment(const rmgd::RunConfig& cfg) {
  return "config_hash=" + cfg.hash() + " seed=" + std::to_string(cfg.seed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RMGD: ring-based multi-grouped binary descriptor"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;
  app.add_option("--config", config_path, "JSON config file")->expected(1);
  add_override_flags(app, ov);
  app.fallthrough();

  std::string data_root, pair_file, model_in, model_out, out_path, report_path, log_path;
  std::string regularizer = "l1";
  std::string roc_path, summary_path, train_name, test_name;
  std::vector<std::string> report_inputs;

  CLI::App* train_bits = app.add_subcommand("train-bits", "select region pairs per feature map");
  train_bits->add_option("--data", data_root)->required();
  train_bits->add_option("--pairs", pair_file)->required();
  train_bits->add_option("--out", model_out)->required();
  train_bits->add_option("--report", report_path, "selection report CSV");

  CLI::App* train_weights = app.add_subcommand("train-weights", "learn group weights");
  train_weights->add_option("--model", model_in)->required();
  train_weights->add_option("--data", data_root)->required();
  train_weights->add_option("--pairs", pair_file)->required();
  train_weights->add_option("--out", model_out)->required();
  train_weights->add_option("--regularizer", regularizer, "none | l1 | l2");
  train_weights->add_option("--log", log_path, "training log CSV");

  CLI::App* extract = app.add_subcommand("extract", "dump descriptors for every patch");
  extract->add_option("--model", model_in)->required();
  extract->add_option("--data", data_root)->required();
  extract->add_option("--out", out_path)->required();

  CLI::App* eval = app.add_subcommand("eval", "score a pair file and report FPR@95%");
  eval->add_option("--model", model_in)->required();
  eval->add_option("--data", data_root)->required();
  eval->add_option("--pairs", pair_file)->required();
  eval->add_option("--roc", roc_path, "ROC CSV output");
  eval->add_option("--summary", summary_path, "summary JSON output");
  eval->add_option("--test-name", test_name, "dataset label for the summary");

  CLI::App* report = app.add_subcommand("report", "combine eval summaries into a results table");
  report->add_option("--inputs", report_inputs, "summary JSON files")->required();
  report->add_option("--out", out_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const rmgd::RunConfig cfg = effective_config(config_path, ov);

    if (train_bits->parsed()) {
      const auto res = rmgd::pipeline::train_bits(cfg, data_root, pair_file);
      rmgd::save_model(model_out, res.model);
      if (!report_path.empty())
        rmgd::write_text_file(report_path, "# " + provenance_comment(cfg) + "\n" + res.report_csv());
      std::printf("candidate pairs: formula %llu, effective %llu (removed regions: %llu)\n",
                  static_cast<unsigned long long>(res.formula_pairs),
                  static_cast<unsigned long long>(res.effective_pairs),
                  static_cast<unsigned long long>(res.removed_regions));
      for (const auto& rep : res.reports) {
        std::printf("map %s: %zu bits selected", rmgd::map_name(rep.map).c_str(),
                    rep.selection.chosen.size());
        if (!rep.selection.warning.empty()) std::printf(" (%s)", rep.selection.warning.c_str());
        std::printf("\n");
      }
    } else if (train_weights->parsed()) {
      rmgd::DescriptorModel model = rmgd::load_model(model_in);
      rmgd::TrainingLog log;
      model = rmgd::pipeline::train_weights(cfg, std::move(model), data_root, pair_file,
                                            rmgd::pipeline::regularizer_from_name(regularizer),
                                            &log);
      rmgd::save_model(model_out, model);
      if (!log_path.empty())
        rmgd::write_text_file(log_path, "# " + provenance_comment(cfg) + "\n" + log.csv());
      const rmgd::WeightVector w{model.weights};
      std::printf("groups: %zu, nonzero weights: %zu\n", model.groups.size(), w.support_size());
    } else if (extract->parsed()) {
      const rmgd::DescriptorModel model = rmgd::load_model(model_in);
      rmgd::pipeline::extract_to_file(cfg, model, data_root, out_path);
    } else if (eval->parsed()) {
      const rmgd::DescriptorModel model = rmgd::load_model(model_in);
      const auto res = rmgd::pipeline::evaluate(cfg, model, data_root, pair_file);
      if (!roc_path.empty())
        rmgd::write_text_file(roc_path,
                              rmgd::roc_csv(res.curve, res.fpr95, provenance_comment(cfg)));
      if (!summary_path.empty()) {
        nlohmann::json j;
        j["train_set"] = model.train_set;
        j["test_set"] = test_name.empty() ? std::filesystem::path(data_root).filename().string()
                                          : test_name;
        j["n_groups"] = res.n_groups;
        j["bits_per_group"] = res.bits_per_group;
        j["active_groups"] = res.active_groups;
        j["fpr95"] = res.fpr95;
        j["config_hash"] = cfg.hash();
        j["seed"] = cfg.seed;
        rmgd::write_text_file(summary_path, j.dump(2) + "\n");
      }
      std::printf("fpr_at_95,%s\n", rmgd::format_double(res.fpr95).c_str());
    } else if (report->parsed()) {
      std::vector<rmgd::pipeline::ReportRow> rows;
      for (const auto& in : report_inputs) {
        nlohmann::json j = nlohmann::json::parse(rmgd::read_text_file(in));
        rows.push_back({j.value("train_set", ""), j.value("test_set", ""),
                        j.value("n_groups", std::size_t{0}),
                        j.value("bits_per_group", std::size_t{0}), j.value("fpr95", 0.0)});
      }
      rmgd::write_text_file(out_path, rmgd::pipeline::report_table_csv(rows));
    }
    return 0;
  } catch (const rmgd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const rmgd::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const rmgd::ResourceError& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
