#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "detgeom/convergence.hpp"
#include "detgeom/dataset_io.hpp"
#include "detgeom/decoder.hpp"
#include "detgeom/errors.hpp"
#include "detgeom/evaluation.hpp"
#include "detgeom/gradcheck.hpp"
#include "detgeom/nms.hpp"

namespace detgeom::cli {

namespace {

// Thrown for input problems that map to exit code 1.
class BadInput : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string fmt_opt(const char* spec, const std::optional<double>& v) {
  return v ? fmt(spec, *v) : std::string("NA");
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw BadInput("cannot write '" + path + "'");
  f << text;
  if (!f) throw BadInput("failed writing '" + path + "'");
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string gt_dir;
  std::string det_file;
  double iou_thresh = kDefaultMatchIou;
  std::string ap_method = "allpoint";
  std::string pr_out;
  bool json = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const DatasetIndex index = load_dataset(a.gt_dir);
  const std::vector<Detection> dets = load_detections(a.det_file);
  const EvalReport report = evaluate(index, dets, a.iou_thresh, parse_ap_method(a.ap_method));

  if (report.unknown_image_detections > 0) {
    err << "warning: " << report.unknown_image_detections
        << " detection(s) reference images without annotations; counted as FP\n";
  }
  if (!a.pr_out.empty()) write_file(a.pr_out, pr_curve_table(report.pr_curve));

  if (a.json) {
    out << report_json(report) << '\n';
    return kExitOk;
  }
  out << "predicted_count: " << report.predicted_count << '\n'
      << "TP: " << report.tp << '\n'
      << "FP: " << report.fp << '\n'
      << "FN: " << report.fn << '\n'
      << "precision: " << fmt("%.4f", report.precision) << '\n'
      << "recall: " << fmt("%.4f", report.recall) << '\n'
      << "AP: " << fmt("%.2f", 100.0 * report.ap) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- nms

struct NmsArgs {
  std::string det_file;
  double thresh = kDefaultNmsThreshold;
  std::string metric = "iou";
};

int cmd_nms(const NmsArgs& a, std::ostream& out, std::ostream&) {
  const SuppressionMetric metric = parse_suppression_metric(a.metric);
  const std::vector<Detection> dets = load_detections(a.det_file);

  std::vector<std::string> order;
  std::map<std::string, std::vector<Detection>> groups;
  for (const auto& d : dets) {
    auto [it, inserted] = groups.try_emplace(d.image_id);
    if (inserted) order.push_back(d.image_id);
    it->second.push_back(d);
  }
  for (const auto& id : order) {
    out << serialize_detections(greedy_nms(groups.at(id), a.thresh, metric));
  }
  return kExitOk;
}

// ---------------------------------------------------------------- decode

struct DecodeArgs {
  std::vector<std::string> tensors;
  std::string config;
  std::optional<double> conf;
  std::string layout = "hwac";
  std::string image_id = "image";
};

int cmd_decode(const DecodeArgs& a, std::ostream& out, std::ostream&) {
  DecoderConfig config = a.config.empty() ? default_decoder_config() : load_decoder_config(a.config);
  if (a.conf) {
    if (!(*a.conf >= 0.0 && *a.conf <= 1.0)) throw BadInput("--conf must lie in [0, 1]");
    config.conf_threshold = *a.conf;
  }
  const std::vector<GridSpec> specs = config.grid_specs();
  if (a.tensors.size() != specs.size()) {
    throw BadInput("expected " + std::to_string(specs.size()) + " tensor files, got " +
                   std::to_string(a.tensors.size()));
  }
  const TensorLayout layout = parse_tensor_layout(a.layout);
  std::vector<RawHead> heads;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    heads.push_back(read_raw_head(a.tensors[i], specs[i], layout));
  }
  out << serialize_detections(decode_heads(heads, config, a.image_id));
  return kExitOk;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  std::size_t samples = 1000;
  double eps = 1e-6;
  std::uint64_t seed = 7;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream&) {
  if (!(a.eps > 0.0)) throw BadInput("--eps must be positive");
  bool pass = true;
  for (const LossKind kind : {LossKind::IoU, LossKind::DIoU}) {
    const GradCheckReport r = run_gradient_check(kind, a.samples, a.eps, a.seed);
    out << "kind=" << to_string(kind) << " samples=" << r.samples
        << " max_rel_error=" << fmt("%.3e", r.max_relative_error)
        << " max_abs_error=" << fmt("%.3e", r.max_absolute_error) << " failures=" << r.failures
        << '\n';
    pass = pass && r.pass();
  }
  out << (pass ? "PASS" : "FAIL") << '\n';
  return pass ? kExitOk : kExitBadInput;
}

// ---------------------------------------------------------------- sim

struct SimArgs {
  SimConfig config;
  std::string scaling = "enclosing";
  std::string curves_out;
  std::string cases_out;
  bool json = false;
};

int cmd_sim(SimArgs a, std::ostream& out, std::ostream&) {
  a.config.scaling = parse_step_scaling(a.scaling);
  a.config.validate();
  const BenchmarkResult result = run_benchmark(a.config);

  if (!a.curves_out.empty()) {
    if (result.cases.empty()) throw BadInput("--curves-out needs at least one case");
    const CaseRecord& first = result.cases.front();
    write_file(a.curves_out,
               export_curves(run_case(first.init, first.target, LossKind::IoU, a.config),
                             run_case(first.init, first.target, LossKind::DIoU, a.config)));
  }
  if (!a.cases_out.empty()) write_file(a.cases_out, export_case_table(result.cases));

  if (a.json) {
    out << summary_json(result) << '\n';
    return kExitOk;
  }
  out << "subset,kind,cases,successes,success_rate,median_steps,mean_steps,mean_final_loss\n";
  const std::pair<const char*, CaseSubset> subsets[] = {
      {"all", CaseSubset::All},
      {"disjoint_start", CaseSubset::DisjointStart},
      {"overlapping_start", CaseSubset::OverlappingStart}};
  for (const auto& [name, subset] : subsets) {
    for (const LossKind kind : {LossKind::IoU, LossKind::DIoU}) {
      const KindSummary s = result.summary(kind, subset);
      out << name << ',' << to_string(kind) << ',' << s.cases << ',' << s.successes << ','
          << fmt("%.4f", s.success_rate) << ',' << fmt_opt("%.1f", s.median_steps) << ','
          << fmt_opt("%.2f", s.mean_steps) << ',' << fmt("%.6f", s.mean_final_loss) << '\n';
    }
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Detection geometry toolkit: IoU/DIoU losses, NMS, YOLOv3 decoding, AP evaluation",
               "detgeom"};
  app.require_subcommand(1);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate detections against annotation XML");
  eval->add_option("--gt-dir,--gt_dir", eval_args.gt_dir, "Directory of <image_id>.xml files")
      ->required();
  eval->add_option("--det-file,--det_file", eval_args.det_file, "Detection records, one per line")
      ->required();
  eval->add_option("--iou-thresh,--iou_thresh", eval_args.iou_thresh, "IoU needed for a match")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  eval->add_option("--ap-method,--ap_method", eval_args.ap_method, "allpoint or elevenpoint")
      ->capture_default_str()
      ->check(CLI::IsMember({"allpoint", "elevenpoint"}));
  eval->add_option("--pr-out,--pr_out", eval_args.pr_out, "Write the PR curve table here");
  eval->add_flag("--json", eval_args.json, "Print the report as JSON");

  NmsArgs nms_args;
  auto* nms = app.add_subcommand("nms", "Greedy non-maximum suppression per image");
  nms->add_option("--det-file,--det_file", nms_args.det_file, "Detection records, one per line")
      ->required();
  nms->add_option("--thresh", nms_args.thresh, "Suppression threshold")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  nms->add_option("--metric", nms_args.metric, "iou or diou")
      ->capture_default_str()
      ->check(CLI::IsMember({"iou", "diou"}));

  DecodeArgs decode_args;
  auto* decode = app.add_subcommand("decode", "Decode three raw YOLOv3 head tensors");
  decode->add_option("--tensors", decode_args.tensors, "Float32 LE files, coarsest grid first")
      ->required()
      ->expected(3);
  decode->add_option("--config", decode_args.config,
                     "Anchor/class configuration (JSON); built-in YOLOv3 defaults when omitted");
  decode->add_option("--conf", decode_args.conf, "Score threshold (default: config value, 0.25)");
  decode->add_option("--layout", decode_args.layout, "hwac (row, col, anchor, channel) or achw")
      ->capture_default_str()
      ->check(CLI::IsMember({"hwac", "achw"}));
  decode->add_option("--image-id,--image_id", decode_args.image_id, "image_id for emitted records")
      ->capture_default_str();

  GradcheckArgs grad_args;
  auto* gradcheck = app.add_subcommand("gradcheck", "Analytic vs finite-difference loss gradients");
  gradcheck->add_option("--samples", grad_args.samples)->capture_default_str();
  gradcheck->add_option("--eps", grad_args.eps)->capture_default_str();
  gradcheck->add_option("--seed", grad_args.seed)->capture_default_str();

  SimArgs sim_args;
  auto* sim = app.add_subcommand("sim", "IoU vs DIoU gradient-descent convergence benchmark");
  sim->add_option("--cases", sim_args.config.case_count)->capture_default_str();
  sim->add_option("--seed", sim_args.config.seed)->capture_default_str();
  sim->add_option("--lr", sim_args.config.learning_rate)->capture_default_str();
  sim->add_option("--max-steps,--max_steps", sim_args.config.max_steps)->capture_default_str();
  sim->add_option("--stop-iou,--stop_iou", sim_args.config.stop_iou)->capture_default_str();
  sim->add_option("--canvas", sim_args.config.canvas)->capture_default_str();
  sim->add_option("--min-size,--min_size", sim_args.config.min_size)->capture_default_str();
  sim->add_option("--scaling", sim_args.scaling, "enclosing or plain")
      ->capture_default_str()
      ->check(CLI::IsMember({"enclosing", "plain"}));
  sim->add_option("--curves-out,--curves_out", sim_args.curves_out,
                  "Write the paired loss curves of the first case here");
  sim->add_option("--cases-out,--cases_out", sim_args.cases_out, "Write the per-case table here");
  sim->add_flag("--json", sim_args.json, "Print the summary as JSON");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitBadInput;
  }

  try {
    if (eval->parsed()) return cmd_eval(eval_args, out, err);
    if (nms->parsed()) return cmd_nms(nms_args, out, err);
    if (decode->parsed()) return cmd_decode(decode_args, out, err);
    if (gradcheck->parsed()) return cmd_gradcheck(grad_args, out, err);
    if (sim->parsed()) return cmd_sim(sim_args, out, err);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const BadInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  err << "internal error: no subcommand dispatched\n";
  return kExitInternal;
}

}  // namespace detgeom::cli
