// g2link: sample quintic points, train the CY metric correction, build G2
// datasets, train the regressors, and verify the results.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "g2link/cy_metric.hpp"
#include "g2link/dataset.hpp"
#include "g2link/pipeline.hpp"
#include "g2link/regressor.hpp"
#include "g2link/stats.hpp"
#include "g2link/verify.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace g2link;

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::string file_hash(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
  std::ostringstream os;
  os << std::hex << fnv1a(bytes);
  return os.str();
}

void require_file(const std::string& path, const std::string& hint) {
  if (path.empty() || !fs::exists(path)) throw std::runtime_error("input file '" + path + "' not found; " + hint);
}

fs::path prepare_out(const std::string& dir) {
  fs::create_directories(dir);
  return fs::path(dir);
}

// Models are used as a pair; check both before any output is written.
void require_models(const std::string& form_path, const std::string& metric_path) {
  require_file(form_path, "train one with `g2link train-g2 --kind form`");
  require_file(metric_path, "train one with `g2link train-g2 --kind metric`");
}

void write_manifest(const fs::path& out, const std::string& command, const json& config,
                    const std::vector<std::string>& inputs, const std::vector<std::string>& outputs, json extra = {}) {
  json m;
  m["command"] = command;
  m["tool_version"] = kToolVersion;
  m["formats"] = {{"points", kPointsVersion}, {"dataset", kDatasetVersion}};
  m["config"] = config;
  m["inputs"] = json::array();
  for (const auto& p : inputs) m["inputs"].push_back({{"path", p}, {"fnv1a", file_hash(p)}});
  m["outputs"] = outputs;
  if (!extra.is_null()) m["results"] = extra;
  std::ofstream(out / ("manifest_" + command + ".json")) << m.dump(2) << '\n';
}

std::vector<int> parse_widths(const std::string& s) {
  std::vector<int> w;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) w.push_back(std::stoi(part));
  if (w.empty()) throw std::invalid_argument("empty width list");
  return w;
}

std::shared_ptr<const CorrectionNet> maybe_cy(const std::string& path) {
  if (path.empty()) return nullptr;
  require_file(path, "train one with `g2link train-cy`");
  return std::make_shared<CorrectionNet>(load_cy_checkpoint(path));
}

json summary_json(const Summary& s) {
  return {{"mean", s.mean}, {"sd", s.sd}, {"median", s.median}, {"max", s.max}, {"count", s.count}};
}

std::vector<G2Sample> subset(const std::vector<G2Sample>& v, std::size_t n) {
  return {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(std::min(n, v.size()))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"G2-structures on the link of the Fermat quintic"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string out = ".";

  // sample
  std::size_t count = 1000;
  auto* sample = app.add_subcommand("sample", "Sample points on the Fermat quintic");
  sample->add_option("--count", count, "Number of points")->check(CLI::PositiveNumber);
  sample->add_option("--seed", seed, "Master seed");
  sample->add_option("--out", out, "Output directory");

  // train-cy
  std::string points_path, cy_path;
  int cy_epochs = 300, cy_batch = 1024, g2_epochs = 150, g2_batch = 256;
  double lr = 1e-3;
  std::string cy_widths = "64,64,64,64", g2_widths = "512,512,256,256";
  auto* train_cy_cmd = app.add_subcommand("train-cy", "Train the CY metric correction network");
  train_cy_cmd->add_option("--points", points_path, "Points file from `sample`")->required();
  train_cy_cmd->add_option("--epochs", cy_epochs, "Training epochs")->capture_default_str();
  train_cy_cmd->add_option("--batch", cy_batch, "Batch size")->capture_default_str();
  train_cy_cmd->add_option("--lr", lr, "Initial learning rate");
  train_cy_cmd->add_option("--widths", cy_widths, "Hidden widths, comma separated")->capture_default_str();
  train_cy_cmd->add_option("--seed", seed, "Master seed");
  train_cy_cmd->add_option("--out", out, "Output directory");

  // build-dataset
  std::string mode = "fs";
  int thetas = 5;
  auto* build = app.add_subcommand("build-dataset", "Build a G2 dataset on the link");
  build->add_option("--points", points_path, "Points file from `sample`")->required();
  build->add_option("--mode", mode, "Base metric: fs or nn")->check(CLI::IsMember({"fs", "nn"}));
  build->add_option("--cy-model", cy_path, "CY metric checkpoint (nn mode)");
  build->add_option("--thetas", thetas, "Fibre angles per base point")->check(CLI::PositiveNumber);
  build->add_option("--seed", seed, "Master seed");
  build->add_option("--out", out, "Output directory");

  // train-g2
  std::string dataset_path, kind = "form", split = "0.9:0.05:0.05", metric_loss = "cholesky";
  bool one_hot = false;
  double huber = std::numeric_limits<double>::infinity();
  auto* train_g2 = app.add_subcommand("train-g2", "Train a G2 form or metric regressor");
  train_g2->add_option("--dataset", dataset_path, "Dataset from `build-dataset`")->required();
  train_g2->add_option("--kind", kind, "form or metric")->check(CLI::IsMember({"form", "metric"}));
  train_g2->add_option("--epochs", g2_epochs, "Training epochs")->capture_default_str();
  train_g2->add_option("--batch", g2_batch, "Batch size")->capture_default_str();
  train_g2->add_option("--lr", lr, "Initial learning rate");
  train_g2->add_option("--widths", g2_widths, "Hidden widths, comma separated")->capture_default_str();
  train_g2->add_option("--split", split, "train:val:test fractions");
  train_g2->add_option("--huber", huber, "Huber delta (inf = pure L2)");
  train_g2->add_option("--metric-loss", metric_loss, "cholesky or reassembled")
      ->check(CLI::IsMember({"cholesky", "reassembled"}));
  train_g2->add_flag("--one-hot", one_hot, "One-hot encode patch indices");
  train_g2->add_option("--seed", seed, "Master seed");
  train_g2->add_option("--out", out, "Output directory");

  // verify
  std::string form_path, metric_path;
  double eps = 1e-5;
  std::size_t max_points = 2000, sweep_points_n = 200;
  auto* verify = app.add_subcommand("verify", "Run the verification suite");
  verify->add_option("--dataset", dataset_path, "Dataset file")->required();
  verify->add_option("--cy-model", cy_path, "CY metric checkpoint (nn datasets)");
  verify->add_option("--form-model", form_path, "Trained form model");
  verify->add_option("--metric-model", metric_path, "Trained metric model");
  verify->add_option("--eps", eps, "NED step");
  verify->add_option("--split", split, "train:val:test fractions used for training");
  verify->add_option("--max-points", max_points, "Points used for NED-based checks");
  verify->add_option("--seed", seed, "Split seed");
  verify->add_option("--out", out, "Output directory");

  // sweep-eps
  double eps_min = 1e-12, eps_max = 1.0;
  int per_decade = 1;
  auto* sweep = app.add_subcommand("sweep-eps", "Median NED norm as a function of the step");
  sweep->add_option("--dataset", dataset_path, "Dataset file")->required();
  sweep->add_option("--cy-model", cy_path, "CY metric checkpoint (nn datasets)");
  sweep->add_option("--form-model", form_path, "Trained form model");
  sweep->add_option("--metric-model", metric_path, "Trained metric model");
  sweep->add_option("--eps-min", eps_min, "Smallest step");
  sweep->add_option("--eps-max", eps_max, "Largest step");
  sweep->add_option("--per-decade", per_decade, "Grid points per decade");
  sweep->add_option("--max-points", sweep_points_n, "Points per sweep");
  sweep->add_option("--split", split, "train:val:test fractions used for training");
  sweep->add_option("--seed", seed, "Split seed");
  sweep->add_option("--out", out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sample->parsed()) {
      const fs::path dir = prepare_out(out);
      SampleStats st;
      PointsFile pf;
      pf.points = sample_points(count, seed, &st);
      pf.seed = seed;
      pf.lines = st.lines;
      pf.redrawn_lines = st.redrawn_lines;
      const std::string path = (dir / "points.bin").string();
      write_points(path, pf);
      write_manifest(dir, "sample", {{"count", count}, {"seed", seed}}, {}, {path},
                     {{"lines", st.lines}, {"redrawn_lines", st.redrawn_lines}});
      std::cout << "wrote " << pf.points.size() << " points to " << path << " (" << st.redrawn_lines
                << " lines redrawn)\n";
    } else if (train_cy_cmd->parsed()) {
      require_file(points_path, "create one with `g2link sample`");
      const fs::path dir = prepare_out(out);
      const PointsFile pf = read_points(points_path);
      const auto pts = make_cy_points(pf.points);
      CyTrainConfig cfg;
      cfg.widths = parse_widths(cy_widths);
      cfg.epochs = cy_epochs;
      cfg.batch = cy_batch;
      cfg.lr = lr;
      cfg.seed = seed;
      auto st = init_cy_training(pts.size(), cfg);
      train_cy(st, pts, cfg, cy_epochs, [](const CyTrainState& s) {
        const auto& r = s.history[s.history.size() - 1];
        std::cout << "epoch " << s.epoch << " val MA " << r.ma << " val vol " << r.vol << std::endl;
      });
      const std::string model = (dir / "cy_model.bin").string();
      const std::string loss = (dir / "cy_loss.csv").string();
      save_cy_checkpoint(model, st.net, st.kappa);
      std::ofstream lcsv(loss);
      write_cy_loss_csv(lcsv, st.history);
      write_manifest(dir, "train-cy", {{"epochs", cy_epochs}, {"batch", cy_batch}, {"lr", lr}, {"widths", cfg.widths}, {"seed", seed}},
                     {points_path}, {model, loss}, {{"kappa", st.kappa}});
    } else if (build->parsed()) {
      require_file(points_path, "create one with `g2link sample`");
      const fs::path dir = prepare_out(out);
      const PointsFile pf = read_points(points_path);
      BuildConfig cfg;
      cfg.mode = parse_mode(mode);
      cfg.thetas = thetas;
      cfg.seed = seed;
      if (cfg.mode == DatasetMode::NN && cy_path.empty())
        throw std::runtime_error("--mode nn needs --cy-model (train one with `g2link train-cy`)");
      auto net = maybe_cy(cy_path);
      BuildReport rep;
      Dataset d = build_dataset(pf.points, cfg, net, &rep);
      if (!rep.normalization.consistent)
        std::cerr << "warning: det g / |c|^2 varies by " << rep.normalization.relative_spread * 100
                  << "% (q10..q90 over median); base metric far from Ricci-flat\n";
      const std::string path = (dir / "dataset.bin").string();
      write_dataset(path, d);
      std::vector<std::string> inputs{points_path};
      if (!cy_path.empty()) inputs.push_back(cy_path);
      write_manifest(dir, "build-dataset", {{"mode", mode}, {"thetas", thetas}, {"seed", seed}}, inputs, {path},
                     {{"records", d.samples.size()},
                      {"c_eta", rep.c_eta},
                      {"lambda", rep.normalization.lambda.real()},
                      {"upsilon_ratio_spread", rep.normalization.relative_spread},
                      {"skipped_base_points", rep.skipped_base_points}});
      std::cout << "wrote " << d.samples.size() << " records to " << path << '\n';
    } else if (train_g2->parsed()) {
      require_file(dataset_path, "create one with `g2link build-dataset`");
      const fs::path dir = prepare_out(out);
      const Dataset d = read_dataset(dataset_path);
      const SplitView sv = split_dataset(d.samples, seed, SplitFractions::parse(split));
      RegressorConfig cfg;
      cfg.widths = parse_widths(g2_widths);
      cfg.epochs = g2_epochs;
      cfg.batch = g2_batch;
      cfg.lr = lr;
      cfg.seed = seed;
      cfg.one_hot = one_hot;
      cfg.huber_delta = huber;
      cfg.metric_loss = metric_loss == "reassembled" ? MetricLoss::Reassembled : MetricLoss::Cholesky;
      const ModelKind mk = kind == "form" ? ModelKind::Form : ModelKind::Metric;
      TrainResult res = train_regressor(mk, sv.train, sv.val, cfg, [](const RegressorHistoryRow& r) {
        std::cout << "epoch " << r.epoch << " train " << r.train_loss << " val " << r.val_loss << std::endl;
      });
      const std::string model = (dir / ("model_" + kind + ".bin")).string();
      const std::string loss = (dir / ("loss_" + kind + ".csv")).string();
      save_regressor(model, res.model);
      std::ofstream lcsv(loss);
      write_regressor_loss_csv(lcsv, res.history);
      json results = {{"aborted", res.aborted}, {"abort_reason", res.abort_reason}};
      if (!sv.test.empty()) results["test_normalized_mse"] = normalized_mse(res.model, sv.test);
      write_manifest(dir, "train-g2",
                     {{"kind", kind}, {"epochs", g2_epochs}, {"batch", g2_batch}, {"lr", lr}, {"widths", cfg.widths},
                      {"split", split}, {"one_hot", one_hot}, {"metric_loss", metric_loss}, {"seed", seed}},
                     {dataset_path}, {model, loss}, results);
      if (res.aborted) {
        std::cerr << "training aborted: " << res.abort_reason << " (weights of the last finite epoch saved)\n";
        return 2;
      }
    } else if (verify->parsed()) {
      require_file(dataset_path, "create one with `g2link build-dataset`");
      const bool with_models = !form_path.empty() || !metric_path.empty();
      if (with_models) require_models(form_path, metric_path);
      const fs::path dir = prepare_out(out);
      const Dataset d = read_dataset(dataset_path);
      if (d.header.mode == DatasetMode::NN && cy_path.empty())
        throw std::runtime_error("NN-mode dataset: pass the --cy-model it was built with");
      auto net = maybe_cy(cy_path);
      const G2Construction cons = construction_for(d.header, net);
      const SplitView sv = split_dataset(d.samples, seed, SplitFractions::parse(split));
      json rep;
      const WedgeCheck wc = wedge_check(d.samples);
      std::vector<double> dev, dev_s;
      for (double r : wc.ratio) dev.push_back(std::abs(r - 7.0));
      for (double r : wc.ratio_structural) dev_s.push_back(std::abs(r - 7.0));
      rep["wedge"] = {{"deviation", summary_json(Summary::of(dev))},
                      {"deviation_structural_psi", summary_json(Summary::of(dev_s))},
                      {"hodge_gap", summary_json(Summary::of(wc.hodge_gap))},
                      {"max_stored_metric_error", wc.max_stored_metric_error},
                      {"positive_definite", wc.positive_definite}};
      {
        std::ofstream csv(dir / "wedge_ratio.csv");
        csv << "index,ratio,ratio_structural,hodge_gap\n" << std::setprecision(17);
        for (std::size_t i = 0; i < wc.ratio.size(); ++i)
          csv << i << ',' << wc.ratio[i] << ',' << wc.ratio_structural[i] << ',' << wc.hodge_gap[i] << '\n';
      }
      const auto checked = subset(d.samples, max_points);
      const ContactCheck cc = contact_check(checked, cons, eps);
      rep["contact"] = {{"min_abs", cc.value.empty() ? 0.0 : *std::min_element(cc.value.begin(), cc.value.end())},
                        {"points", cc.value.size()},
                        {"failures", cc.failures}};
      const TorsionStats te = torsion_check(checked, exact_forms(cons), eps);
      rep["torsion_exact"] = {{"eps", eps},
                              {"points", te.points},
                              {"failures", te.failures},
                              {"dphi_over_ww", summary_json(te.dphi_ratio())},
                              {"dpsi", summary_json(te.dpsi())},
                              {"dphi_minus_ww", summary_json(Summary::of(te.dphi_minus_ww))},
                              {"mse_dphi_ww", te.mse_dphi_ww}};
      const VolumeCheck vc = volume_check(d.samples);
      rep["volume"] = {{"pmcc", vc.fit.r}, {"slope", vc.fit.slope}, {"intercept", vc.fit.intercept}};
      {
        std::ofstream csv(dir / "volumes.csv");
        csv << "vol_cy,vol_g2\n" << std::setprecision(17);
        for (const auto& s : d.samples) csv << s.vol_cy << ',' << s.vol_g2 << '\n';
      }
      {
        std::ofstream phi_csv(dir / "hist_phi.csv"), g_csv(dir / "hist_g.csv");
        write_component_histograms(phi_csv, g_csv, d.samples);
      }
      std::vector<std::string> inputs{dataset_path};
      if (with_models) {
        auto fm = std::make_shared<DenseModel>(load_regressor(form_path));
        auto mm = std::make_shared<DenseModel>(load_regressor(metric_path));
        inputs.push_back(form_path);
        inputs.push_back(metric_path);
        const auto test = subset(sv.test, max_points);
        const RegressorEval ef = evaluate_regressor(*fm, sv.test);
        const RegressorEval em = evaluate_regressor(*mm, sv.test);
        const TorsionStats tm = torsion_check(test, model_forms(fm, mm, d.header.c_eta), eps);
        const auto ratios = model_wedge_ratio(*fm, *mm, sv.test);
        rep["models"] = {{"form_test_normalized_mse", ef.normalized_mse},
                         {"form_min_component_pmcc", ef.min_component_pmcc},
                         {"form_component_pmcc", ef.component_pmcc},
                         {"metric_test_normalized_mse", em.normalized_mse},
                         {"metric_min_component_pmcc", em.min_component_pmcc},
                         {"metric_component_pmcc", em.component_pmcc},
                         {"metric_positive_definite_fraction", em.positive_definite_fraction},
                         {"wedge_ratio", summary_json(Summary::of(ratios))},
                         {"torsion",
                          {{"eps", eps},
                           {"points", tm.points},
                           {"failures", tm.failures},
                           {"dphi_over_ww", summary_json(tm.dphi_ratio())},
                           {"dpsi", summary_json(tm.dpsi())},
                           {"psi_norm_median", tm.psi_norm.empty() ? 0.0 : median(tm.psi_norm)},
                           {"mse_dphi_ww", tm.mse_dphi_ww}}}};
      }
      if (!cy_path.empty()) inputs.push_back(cy_path);
      std::ofstream(dir / "report.json") << rep.dump(2) << '\n';
      write_manifest(dir, "verify", {{"eps", eps}, {"split", split}, {"seed", seed}, {"max_points", max_points}}, inputs,
                     {(dir / "report.json").string()});
      std::cout << rep.dump(2) << '\n';
    } else if (sweep->parsed()) {
      require_file(dataset_path, "create one with `g2link build-dataset`");
      const bool with_models = !form_path.empty() || !metric_path.empty();
      if (with_models) require_models(form_path, metric_path);
      const fs::path dir = prepare_out(out);
      const Dataset d = read_dataset(dataset_path);
      if (d.header.mode == DatasetMode::NN && cy_path.empty())
        throw std::runtime_error("NN-mode dataset: pass the --cy-model it was built with");
      auto net = maybe_cy(cy_path);
      const G2Construction cons = construction_for(d.header, net);
      const SplitView sv = split_dataset(d.samples, seed, SplitFractions::parse(split));
      const auto pts = subset(sv.test.empty() ? d.samples : sv.test, sweep_points_n);
      const auto grid = log_grid(eps_min, eps_max, per_decade);
      std::vector<std::string> outputs;
      auto run = [&](const std::string& name, const std::vector<AnchoredEvaluator>& ev) {
        const SweepResult r = epsilon_sweep(ev, grid);
        const std::string path = (dir / ("sweep_" + name + ".csv")).string();
        std::ofstream csv(path);
        r.write_csv(csv);
        outputs.push_back(path);
        std::cout << name << ":";
        for (Regime g : r.regime_sequence()) std::cout << ' ' << regime_name(g);
        std::cout << '\n';
      };
      run("omega", kahler_sweep_points(pts, cons));
      run("psi_exact", sweep_points(pts, exact_forms(cons), SweepForm::Psi));
      std::vector<std::string> inputs{dataset_path};
      if (with_models) {
        auto fm = std::make_shared<DenseModel>(load_regressor(form_path));
        auto mm = std::make_shared<DenseModel>(load_regressor(metric_path));
        const auto forms = model_forms(fm, mm, d.header.c_eta);
        run("phi_model", sweep_points(pts, forms, SweepForm::Phi));
        run("psi_model", sweep_points(pts, forms, SweepForm::Psi));
        inputs.push_back(form_path);
        inputs.push_back(metric_path);
      }
      if (!cy_path.empty()) inputs.push_back(cy_path);
      write_manifest(dir, "sweep-eps",
                     {{"eps_min", eps_min}, {"eps_max", eps_max}, {"per_decade", per_decade}, {"points", pts.size()}},
                     inputs, outputs);
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
