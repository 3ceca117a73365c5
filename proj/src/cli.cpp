#include "saod/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <ostream>
#include <sstream>
#include <vector>

#include "saod/accuracy.hpp"
#include "saod/io.hpp"
#include "saod/testkit.hpp"

namespace saod::cli {
namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::ConfigError, "'" + key + "' expects a number, got '" + value + "'");
}

long long parse_integer(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::ConfigError, "'" + key + "' expects an integer, got '" + value + "'");
}

std::string opt(double v) { return io::format_real(v); }

template <typename T>
std::string opt(const std::optional<T>& v) {
  return v ? io::format_real(*v) : std::string();
}

void require_path(const std::filesystem::path& p, const char* flag) {
  if (p.empty()) throw Error(ErrorCode::ConfigError, std::string("missing required --") + flag);
}

GroundTruthSet load_gt(const RunConfig& c) {
  require_path(c.gt, "gt");
  return io::load_ground_truth(c.gt);
}

DetectionSet load_all_detections(const RunConfig& c, const ClassUniverse& universe) {
  require_path(c.dets, "dets");
  std::vector<DetectionSet> parts;
  parts.push_back(io::load_detections(c.dets, universe));
  for (const auto& p : {c.dets_corrupt, c.dets_ood}) {
    if (!p.empty()) parts.push_back(io::load_detections(p, universe));
  }
  if (parts.size() == 1) return parts.front();
  std::vector<const DetectionSet*> ptrs;
  for (const auto& p : parts) ptrs.push_back(&p);
  return concat(ptrs);
}

std::optional<std::map<ImageId, double>> load_override(const RunConfig& c) {
  if (c.uncertainty.empty()) return std::nullopt;
  std::map<ImageId, double> values;
  for (const auto& e : io::load_uncertainties(c.uncertainty)) values[e.image_id] = e.uncertainty;
  return values;
}

std::size_t extra_size(const RunConfig& c, const std::string& key, std::size_t fallback) {
  const auto it = c.extra.find(key);
  if (it == c.extra.end()) return fallback;
  const long long v = parse_integer(key, it->second);
  if (v < 0) throw Error(ErrorCode::ConfigError, "'" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

double extra_real(const RunConfig& c, const std::string& key, double fallback) {
  const auto it = c.extra.find(key);
  return it == c.extra.end() ? fallback : parse_double(key, it->second);
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> values;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigError, "config line " + std::to_string(number) + " lacks '='");
    }
    const std::string key = normalize_key(trim(t.substr(0, eq)));
    if (key.empty()) {
      throw Error(ErrorCode::ConfigError, "config line " + std::to_string(number) + " has no key");
    }
    values[key] = trim(t.substr(eq + 1));
  }
  return values;
}

void apply_setting(RunConfig& c, const std::string& raw_key, const std::string& value) {
  const std::string key = normalize_key(raw_key);
  if (key == "gt") c.gt = value;
  else if (key == "dets") c.dets = value;
  else if (key == "dets_corrupt") c.dets_corrupt = value;
  else if (key == "dets_ood") c.dets_ood = value;
  else if (key == "uncertainty") c.uncertainty = value;
  else if (key == "self_aware") c.self_aware = value;
  else if (key == "out") c.out = value;
  else if (key == "tau") {
    c.tau = parse_double(key, value);
    validate_tau(c.tau);
  } else if (key == "bins") {
    const long long b = parse_integer(key, value);
    if (b < 1) throw Error(ErrorCode::ConfigError, "bins must be positive");
    c.bins = static_cast<int>(b);
  } else if (key == "agg") c.aggregation = AggregationStrategy::parse(value);
  else if (key == "calibrator") c.calibrator = calibrator_kind_from_string(value);
  else if (key == "threshold_method") {
    if (value == "pseudo_ood") c.threshold_method = ImageThresholdMethod::PseudoOod;
    else if (value == "tpr95") c.threshold_method = ImageThresholdMethod::TprAt95;
    else throw Error(ErrorCode::ConfigError, "threshold_method must be pseudo_ood or tpr95");
  } else if (key == "seed") {
    const long long s = parse_integer(key, value);
    if (s < 0) throw Error(ErrorCode::ConfigError, "seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  } else {
    c.extra[key] = value;
  }
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidTau:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InfeasibleSpec:
    case ErrorCode::MissingClassModel:
      return kExitConfig;
    default:
      return kExitInput;
  }
}

int cmd_evaluate(const RunConfig& c, std::ostream& out) {
  const GroundTruthSet gts = load_gt(c);
  const DetectionSet dets = load_all_detections(c, gts.universe());
  validate_tau(c.tau);

  auto ap_job = std::async(std::launch::async, [&] { return mean_average_precision(dets, gts, c.tau); });
  auto coco_job = std::async(std::launch::async, [&] { return coco_ap(dets, gts); });
  auto lrp_job = std::async(std::launch::async, [&] { return dataset_lrp(dets, gts, c.tau); });
  auto laece_job = std::async(std::launch::async, [&] { return laece(dets, gts, c.tau, c.bins); });
  auto rel_job =
      std::async(std::launch::async, [&] { return reliability_diagram(dets, gts, c.tau, c.bins); });
  const ApResult ap = ap_job.get();
  const CocoApResult coco = coco_job.get();
  const DatasetLrp lrp = lrp_job.get();
  const LaeceResult cal = laece_job.get();
  const ReliabilityDiagram reliability = rel_job.get();

  std::ostringstream csv;
  csv << "class,name,ap,coco_ap,lrp,lrp_loc,lrp_fp,lrp_fn,laece\n";
  for (ClassId k = 1; k <= gts.universe().num_classes; ++k) {
    const auto find = [k](const auto& m) {
      const auto it = m.find(k);
      return it == m.end() ? std::nullopt : std::optional(it->second);
    };
    const auto lrp_k = find(lrp.per_class);
    csv << k << ',' << gts.universe().name(k) << ',' << opt(find(ap.per_class)) << ','
        << opt(find(coco.per_class)) << ',';
    if (lrp_k) {
      csv << opt(lrp_k->lrp) << ',' << opt(lrp_k->lrp_loc) << ',' << opt(lrp_k->lrp_fp) << ','
          << opt(lrp_k->lrp_fn);
    } else {
      csv << ",,,";
    }
    csv << ',' << opt(find(cal.per_class)) << '\n';
  }

  json summary;
  summary["tau"] = c.tau;
  summary["bins"] = c.bins;
  summary["ap"] = ap.ap;
  summary["coco_ap"] = coco.ap;
  summary["ap50"] = coco.per_threshold[0];
  summary["ap75"] = coco.per_threshold[5];
  summary["lrp"] = lrp.lrp;
  summary["lrp_loc"] = lrp.lrp_loc;
  summary["lrp_fp"] = lrp.lrp_fp;
  summary["lrp_fn"] = lrp.lrp_fn;
  summary["laece"] = cal.laece;

  io::write_text(csv.str(), c.out / "per_class.csv");
  io::write_json(summary, c.out / "summary.json");
  io::write_text(reliability.to_csv(), c.out / "reliability.csv");
  out << "AP=" << opt(ap.ap) << " COCO-AP=" << opt(coco.ap) << " LRP=" << opt(lrp.lrp)
      << " LaECE=" << opt(cal.laece) << '\n';
  return kExitOk;
}

int cmd_calibrate(const RunConfig& c, std::ostream& out) {
  const GroundTruthSet gts = load_gt(c);
  const DetectionSet dets = load_all_detections(c, gts.universe());
  const CalibratorModel model =
      fit_calibrator(c.calibrator, calibration_pairs(dets, gts, c.tau), gts.universe(), c.bins);
  const DetectionSet calibrated = apply_calibrator(model, dets);
  io::write_json(model.to_json(), c.out / "calibrator.json");
  io::save_detections(calibrated, c.out / "calibrated_dets.json");
  out << "LaECE before=" << opt(laece(dets, gts, c.tau, c.bins).laece)
      << " after=" << opt(laece(calibrated, gts, c.tau, c.bins).laece) << '\n';
  return kExitOk;
}

int cmd_threshold(const RunConfig& c, std::ostream& out) {
  const GroundTruthSet gts = load_gt(c);
  const DetectionSet dets = load_all_detections(c, gts.universe());
  json doc = json::object();
  for (const auto& [k, v] : lrp_optimal_thresholds(dets, gts, c.tau)) {
    doc[std::to_string(k)] = io::real_to_json(v);
  }
  io::write_json(doc, c.out / "thresholds.json");
  out << "thresholds for " << doc.size() << " classes\n";
  return kExitOk;
}

int cmd_uncertainty(const RunConfig& c, std::ostream& out) {
  const GroundTruthSet gts = load_gt(c);
  const DetectionSet dets = load_all_detections(c, gts.universe());
  std::vector<io::ImageUncertaintyEntry> entries;
  std::vector<double> id, ood;
  for (const auto& image : gts.images()) {
    std::vector<Detection> mine;
    for (std::size_t i : dets.indices_for_image(image.image_id)) mine.push_back(dets[i]);
    const double u = image_uncertainty(mine, c.aggregation).value;
    entries.push_back({image.image_id, u, image.split});
    if (image.split == SplitTag::InDistribution) id.push_back(u);
    if (image.split == SplitTag::OutOfDistribution) ood.push_back(u);
  }
  io::save_uncertainties(entries, c.out / "uncertainty.json");
  out << "images=" << entries.size();
  if (!id.empty() && !ood.empty()) out << " AUROC=" << opt(auroc(id, ood));
  out << '\n';
  return kExitOk;
}

int cmd_make_self_aware(const RunConfig& c, std::ostream& out) {
  GroundTruthSet gts = load_gt(c);
  const bool has_val = std::any_of(gts.images().begin(), gts.images().end(), [](const auto& im) {
    return im.split == SplitTag::Validation;
  });
  if (has_val) {
    gts = gts.filter_images([](const ImageRecord& im) { return im.split == SplitTag::Validation; });
  }
  require_path(c.dets, "dets");
  require_path(c.dets_ood, "dets-ood");
  const DetectionSet dets = io::load_detections(c.dets, gts.universe());
  const DetectionSet pseudo = io::load_detections(c.dets_ood, gts.universe());
  MakeSelfAwareOptions options;
  options.tau = c.tau;
  options.bins = c.bins;
  options.aggregation = c.aggregation;
  options.calibrator = c.calibrator;
  options.threshold_method = c.threshold_method;
  const SelfAwareFit fit = make_self_aware(gts, dets, pseudo, options);
  io::write_json(fit.config.to_json(), c.out / "self_aware.json");
  out << "threshold=" << opt(fit.config.image_threshold) << " pseudo BA=" << opt(fit.pseudo_stats.ba)
      << " TPR=" << opt(fit.pseudo_stats.tpr) << " TNR=" << opt(fit.pseudo_stats.tnr) << '\n';
  return kExitOk;
}

int cmd_saod(const RunConfig& c, std::ostream& out) {
  const GroundTruthSet gts = load_gt(c);
  require_path(c.self_aware, "self-aware");
  const SelfAwareConfig config = SelfAwareConfig::from_json(io::read_json(c.self_aware));
  const DetectionSet dets = load_all_detections(c, gts.universe());
  const auto override_values = load_override(c);
  const SaodReport report = evaluate_saod(config, gts, dets, c.tau, c.bins,
                                          override_values ? &*override_values : nullptr);
  io::write_json(report.to_json(), c.out / "report.json");
  const std::string table = report.to_table();
  io::write_text(table, c.out / "report.txt");
  out << table;
  return kExitOk;
}

int cmd_synth(const RunConfig& c, std::ostream& out) {
  if (!c.seed) throw Error(ErrorCode::ConfigError, "synth requires an explicit --seed");
  testkit::SyntheticSpec spec;
  spec.seed = *c.seed;
  spec.num_classes = static_cast<int>(extra_size(c, "classes", 3));
  spec.num_images = extra_size(c, "images", 40);
  spec.num_val_images = extra_size(c, "val_images", 40);
  spec.num_corrupt_images = extra_size(c, "corrupt_images", 20);
  spec.num_ood_images = extra_size(c, "ood_images", 40);
  spec.gts_per_image = extra_size(c, "gts_per_image", spec.gts_per_image);
  spec.tp_rate = extra_real(c, "tp_rate", spec.tp_rate);
  spec.fp_rate = extra_real(c, "fp_rate", spec.fp_rate);
  spec.delta = extra_real(c, "delta", spec.delta);
  spec.ood_uncertainty_shift = extra_real(c, "ood_shift", spec.ood_uncertainty_shift);
  spec.iou_min = extra_real(c, "iou_min", spec.iou_min);
  spec.iou_max = extra_real(c, "iou_max", spec.iou_max);
  spec.corruption_drop = extra_real(c, "corruption_drop", spec.corruption_drop);
  spec.dets_per_ood_image = extra_size(c, "ood_dets", spec.dets_per_ood_image);
  if (const auto it = c.extra.find("confidence"); it != c.extra.end()) {
    if (it->second == "calibrated") spec.confidence = testkit::ConfidenceModel::Calibrated;
    else if (it->second == "overconfident") spec.confidence = testkit::ConfidenceModel::Overconfident;
    else if (it->second == "underconfident") spec.confidence = testkit::ConfidenceModel::Underconfident;
    else throw Error(ErrorCode::ConfigError, "unknown confidence model '" + it->second + "'");
  }
  testkit::SyntheticBundle bundle = testkit::generate(spec);
  if (const std::size_t pad = extra_size(c, "pad", 0); pad > 0) {
    bundle.detections = testkit::inject_dummies(bundle.detections, bundle.ground_truths, pad, spec.seed);
  }
  io::save_ground_truth(bundle.ground_truths, c.out / "gt.json");
  const auto& gt = bundle.ground_truths;
  const auto is_val = [&gt](const Detection& d) {
    return gt.find_image(d.image_id)->split == SplitTag::Validation;
  };
  io::save_detections(bundle.detections.filter([&](const Detection& d) { return !is_val(d); }),
                      c.out / "dets.json");
  io::save_detections(bundle.detections.filter(is_val), c.out / "val_dets.json");
  io::save_detections(bundle.pseudo_ood_detections, c.out / "pseudo_ood.json");
  out << "images=" << bundle.ground_truths.num_images() << " objects=" << bundle.ground_truths.size()
      << " detections=" << bundle.detections.size() << '\n';
  return kExitOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Self-aware object detection evaluation"};
  app.require_subcommand(1);

  using Command = int (*)(const RunConfig&, std::ostream&);
  const std::vector<std::tuple<std::string, std::string, Command>> commands{
      {"evaluate", "AP, COCO AP, LRP and LaECE per class plus a reliability table", cmd_evaluate},
      {"calibrate", "fit a calibrator and write calibrated detections", cmd_calibrate},
      {"threshold", "LRP-optimal per-class score thresholds", cmd_threshold},
      {"uncertainty", "image-level uncertainties for every image", cmd_uncertainty},
      {"make-self-aware", "fit the self-aware configuration on validation data", cmd_make_self_aware},
      {"saod", "DAQ report over the ID, corrupted and OOD splits", cmd_saod},
      {"synth", "write a seeded synthetic dataset", cmd_synth},
  };
  const std::vector<std::string> flags{"gt",  "dets", "dets-corrupt", "dets-ood", "uncertainty",
                                       "self-aware", "out", "tau", "bins", "agg",
                                       "calibrator", "threshold-method", "seed"};

  std::vector<std::pair<std::string, std::string>> flag_values;
  std::string config_path;
  std::vector<std::string> settings;
  Command chosen = nullptr;
  for (const auto& [name, help, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    for (const auto& flag : flags) {
      sub->add_option_function<std::string>(
          "--" + flag, [&flag_values, flag](const std::string& v) { flag_values.emplace_back(flag, v); });
    }
    sub->add_option("--config", config_path, "flat key = value run configuration");
    sub->add_option("--set", settings, "extra key=value setting (repeatable)");
    sub->callback([&chosen, f = fn] { chosen = f; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error code=" << to_string(ErrorCode::ConfigError) << " message=" << e.what() << '\n';
    return kExitConfig;
  }

  try {
    RunConfig config;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw Error(ErrorCode::FileNotFound, "cannot open config " + config_path);
      std::stringstream buffer;
      buffer << in.rdbuf();
      for (const auto& [k, v] : parse_config_text(buffer.str())) apply_setting(config, k, v);
    }
    for (const auto& s : settings) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "--set expects key=value");
      apply_setting(config, s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [k, v] : flag_values) apply_setting(config, k, v);
    return chosen(config, out);
  } catch (const Error& e) {
    err << "error code=" << to_string(e.code()) << " message=" << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error code=" << to_string(ErrorCode::MalformedFile) << " message=" << e.what() << '\n';
    return kExitInput;
  }
}

}  // namespace saod::cli
