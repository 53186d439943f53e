// Command-line surface: data generation, degradation, training, evaluation,
// distribution-shift analysis and sampling.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "bird/analysis.hpp"
#include "bird/config.hpp"
#include "bird/degrade.hpp"
#include "bird/diffusion.hpp"
#include "bird/evalmetrics.hpp"
#include "bird/io.hpp"
#include "bird/kernels.hpp"
#include "bird/trainer.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace bird;

namespace {

std::vector<std::string> list_images(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".pgm" || ext == ".ppm") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw std::runtime_error("no .pgm/.ppm images in " + dir);
  return files;
}

std::vector<Image> load_dir(const std::string& dir) {
  std::vector<Image> images;
  for (const std::string& path : list_images(dir))
    images.push_back(read_image(path));
  return images;
}

void apply_threads(int threads) {
  if (threads == 0) {
    kernels::set_parallel(false);
  } else if (threads > 0) {
    kernels::set_parallel(true);
#ifdef _OPENMP
    omp_set_num_threads(threads);
#endif
  }
}

int cmd_gen_data(const std::string& out, int n, int size, uint64_t seed,
                 int scale, bool with_ft) {
  ensure_directory(out);
  ensure_directory(out + "/hr");
  ensure_directory(out + "/lr_a");
  ensure_directory(out + "/lr_b");
  const std::vector<Image> corpus = gen_corpus(n, size, seed);
  char name[64];
  for (int i = 0; i < n; ++i) {
    const Image& hr = corpus[static_cast<size_t>(i)];
    std::snprintf(name, sizeof(name), "/img_%04d", i);
    write_image(out + "/hr" + name + ".pgm", hr);
    DegradationConfig ca = default_family_a(0);
    ca.scale = scale;
    ca.seed = derive_seed(seed, 0xA, static_cast<uint64_t>(i));
    write_image(out + "/lr_a" + name + ".pgm", degrade(hr, ca));
    DegradationConfig cb = default_family_b(0);
    cb.scale = scale;
    cb.seed = derive_seed(seed, 0xB, static_cast<uint64_t>(i));
    write_image(out + "/lr_b" + name + ".pgm", degrade(hr, cb));
    if (with_ft) write_tensor_ft(out + "/hr" + name + ".ft", hr.to_tensor());
  }
  KvFile manifest;
  manifest.set_int("n", n);
  manifest.set_int("size", size);
  manifest.set_u64("seed", seed);
  manifest.set_int("scale", scale);
  write_text_file_atomic(out + "/manifest.txt", manifest.serialize());
  std::printf("wrote %d HR/LR triples under %s\n", n, out.c_str());
  return 0;
}

int cmd_degrade(const std::string& in, const std::string& out,
                const std::string& family, uint64_t seed,
                DegradationConfig cfg) {
  cfg.family = family == "a" ? Family::A_synthetic : Family::B_reallike;
  ensure_directory(out);
  int i = 0;
  for (const std::string& path : list_images(in)) {
    cfg.seed = derive_seed(seed, 0xDE, static_cast<uint64_t>(i++));
    const Image lr = degrade(read_image(path), cfg);
    write_image(out + "/" + fs::path(path).filename().string(), lr);
  }
  std::printf("degraded %d images (%s) into %s\n", i, family.c_str(),
              out.c_str());
  return 0;
}

int cmd_train(const TrainingConfig& cfg, const std::string& out,
              const std::string& resume) {
  const TrainResult result = train(cfg, out, resume);
  std::printf("trained %s for %lld iterations in %.1f s\n",
              to_string(cfg.variant).c_str(),
              static_cast<long long>(cfg.iterations), result.wall_seconds);
  std::printf("final eval: psnr %.3f  ssim %.4f  struct %.5f  reward %.4f\n",
              result.final_eval.psnr, result.final_eval.ssim,
              result.final_eval.struct_loss, result.final_eval.reward);
  if (!out.empty())
    std::printf("artifacts: %s/{manifest.txt,runlog.csv,eval.csv,final.bird}\n",
                out.c_str());
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const TrainingConfig& cfg,
             const std::string& out_csv) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  TrainData train_data;
  EvalData eval_data;
  build_datasets(cfg, &train_data, &eval_data);
  const EvalReport report = evaluate(
      ckpt.params, eval_data.lr, eval_data.hr, cfg.make_schedule(),
      cfg.make_reward_fn(), ckpt.feats,
      derive_seed(cfg.seed, 0x6576616c, 0),
      to_string(cfg.variant) + "/gamma=" + std::to_string(cfg.gamma));
  report.write_csv(out_csv);
  std::printf("%s\n", report.summary_line().c_str());
  std::printf("per-image rows: %s\n", out_csv.c_str());
  return 0;
}

int cmd_analyze(const std::string& hr_dir, const std::string& a_dir,
                const std::string& b_dir, const std::string& out, int scale,
                double bandwidth) {
  ensure_directory(out);
  const std::vector<Image> hr = load_dir(hr_dir);
  const std::vector<Image> lr_a = load_dir(a_dir);
  const std::vector<Image> lr_b = load_dir(b_dir);
  check(hr.size() == lr_a.size() && hr.size() == lr_b.size(),
        "analyze: hr/corpus-a/corpus-b must pair up 1:1");

  // lbp_histograms.csv: one wide row per LR image.
  {
    std::ostringstream csv;
    csv << "corpus,image";
    for (int b = 0; b < 256; ++b) csv << ",b" << b;
    csv << "\n";
    auto emit = [&csv](const char* corpus, const std::vector<Image>& images) {
      char buf[32];
      for (size_t i = 0; i < images.size(); ++i) {
        const auto hist = lbp_histogram(images[i]);
        csv << corpus << "," << i;
        for (double v : hist) {
          std::snprintf(buf, sizeof(buf), ",%.9g", v);
          csv << buf;
        }
        csv << "\n";
      }
    };
    emit("a", lr_a);
    emit("b", lr_b);
    write_text_file_atomic(out + "/lbp_histograms.csv", csv.str());
  }

  // band_cosine.csv plus kde_curves.csv over the same per-pair values.
  {
    std::ostringstream csv, kcsv;
    csv << "corpus,image,band,cosine\n";
    kcsv << "corpus,band,bandwidth,grid,density\n";
    const char* band_names[3] = {"low", "mid", "high"};
    char buf[96];
    for (int corpus = 0; corpus < 2; ++corpus) {
      const std::vector<Image>& lr = corpus == 0 ? lr_a : lr_b;
      const char* tag = corpus == 0 ? "a" : "b";
      for (int b = 0; b < 3; ++b) {
        const Band band = static_cast<Band>(b);
        const std::vector<double> cosines =
            band_cosines_for_pairs(lr, hr, scale, band);
        for (size_t i = 0; i < cosines.size(); ++i) {
          std::snprintf(buf, sizeof(buf), "%s,%zu,%s,%.9g\n", tag, i,
                        band_names[b], cosines[i]);
          csv << buf;
        }
        const KdeCurve curve = kde(cosines, bandwidth);
        for (size_t i = 0; i < curve.grid.size(); ++i) {
          std::snprintf(buf, sizeof(buf), "%s,%s,%.9g,%.9g,%.9g\n", tag,
                        band_names[b], curve.bandwidth, curve.grid[i],
                        curve.density[i]);
          kcsv << buf;
        }
      }
    }
    write_text_file_atomic(out + "/band_cosine.csv", csv.str());
    write_text_file_atomic(out + "/kde_curves.csv", kcsv.str());
  }

  // pca_points.csv: LBP histograms of both corpora projected to 2-D.
  {
    std::vector<std::vector<double>> feats;
    for (const Image& img : lr_a) {
      const auto h = lbp_histogram(img);
      feats.emplace_back(h.begin(), h.end());
    }
    for (const Image& img : lr_b) {
      const auto h = lbp_histogram(img);
      feats.emplace_back(h.begin(), h.end());
    }
    const auto points = pca_project(feats);
    std::ostringstream csv;
    csv << "corpus,image,x,y\n";
    char buf[96];
    for (size_t i = 0; i < points.size(); ++i) {
      const bool is_a = i < lr_a.size();
      std::snprintf(buf, sizeof(buf), "%s,%zu,%.9g,%.9g\n", is_a ? "a" : "b",
                    is_a ? i : i - lr_a.size(), points[i][0], points[i][1]);
      csv << buf;
    }
    write_text_file_atomic(out + "/pca_points.csv", csv.str());
  }

  const LbpSeparation sep = lbp_family_separation(lr_a, lr_b, 0);
  std::printf("lbp separation: inter %.4f vs within %.4f\n", sep.inter,
              sep.within);
  std::printf("wrote lbp_histograms.csv band_cosine.csv kde_curves.csv "
              "pca_points.csv under %s\n",
              out.c_str());
  return 0;
}

Image trace_montage(const SampleTrace& trace) {
  check(!trace.states.empty(), "empty trace");
  const auto& first = trace.states.front().x;
  const int h = first.dim(1), w = first.dim(2);
  const int n = static_cast<int>(trace.states.size());
  Image grid(1, h, n * (w + 1) - 1, 1.0f);
  for (int s = 0; s < n; ++s) {
    const auto& st = trace.states[static_cast<size_t>(s)];
    const Tensor& show = st.x0_pred.numel() > 0 ? st.x0_pred : st.x;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        float v = show[static_cast<int64_t>(y) * w + x];
        grid.at(0, y, s * (w + 1) + x) = v < 0 ? 0 : (v > 1 ? 1 : v);
      }
  }
  return grid;
}

int cmd_sample(const std::string& ckpt_path, const std::string& lr_path,
               const std::string& out, const TrainingConfig& cfg,
               bool with_trace) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  ensure_directory(out);
  std::vector<std::string> inputs;
  if (fs::is_directory(lr_path))
    inputs = list_images(lr_path);
  else
    inputs.push_back(lr_path);
  const NoiseSchedule sched = cfg.make_schedule();
  for (const std::string& path : inputs) {
    const Image lr = read_image(path);
    SampleTrace trace;
    const Tensor sr = sample_full(ckpt.params, lr.to_tensor(), sched,
                                  derive_seed(cfg.seed, 0x73616d70, 0),
                                  with_trace ? &trace : nullptr);
    Image sr_img = Image::from_tensor(sr);
    clamp01(sr_img);
    const std::string stem = fs::path(path).stem().string();
    write_image(out + "/sr_" + stem + ".pgm", sr_img);
    if (with_trace)
      write_image(out + "/trace_" + stem + ".pgm", trace_montage(trace));
  }
  std::printf("wrote %zu SR outputs to %s\n", inputs.size(), out.c_str());
  return 0;
}

TrainingConfig config_from_cli(const std::string& config_path,
                               const KvFile& overrides) {
  KvFile kv;
  if (!config_path.empty()) kv = KvFile::parse_file(config_path);
  for (const auto& [k, v] : overrides.pairs()) kv.set(k, v);
  return TrainingConfig::from_kv(kv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bidirectional reward-guided diffusion super-resolution"};
  app.require_subcommand(1);
  int threads = -1;
  app.add_option("--threads", threads,
                 "OpenMP thread count (0 forces serial kernels)");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate HR/LR corpora");
  std::string gen_out = "data";
  int gen_n = 64, gen_size = 32, gen_scale = 4;
  uint64_t gen_seed = 0;
  bool gen_ft = false;
  gen->add_option("--out", gen_out, "Output directory");
  gen->add_option("--n", gen_n, "Number of images");
  gen->add_option("--size", gen_size, "HR image size");
  gen->add_option("--seed", gen_seed, "Corpus seed");
  gen->add_option("--scale", gen_scale, "Downsampling factor");
  gen->add_flag("--ft", gen_ft, "Also write lossless .ft sidecars");

  // degrade
  auto* deg = app.add_subcommand("degrade", "Degrade a directory of images");
  std::string deg_in, deg_out = "degraded", deg_family = "a";
  uint64_t deg_seed = 0;
  DegradationConfig deg_cfg;
  deg->add_option("--in", deg_in, "Input directory")->required();
  deg->add_option("--out", deg_out, "Output directory");
  deg->add_option("--family", deg_family, "Degradation family: a or b")
      ->check(CLI::IsMember({"a", "b"}));
  deg->add_option("--seed", deg_seed, "Degradation seed");
  deg->add_option("--scale", deg_cfg.scale, "Downsampling factor");
  deg->add_option("--blur-lo", deg_cfg.blur_sigma_lo, "Min blur sigma");
  deg->add_option("--blur-hi", deg_cfg.blur_sigma_hi, "Max blur sigma");
  deg->add_option("--noise-lo", deg_cfg.noise_std_lo, "Min noise std");
  deg->add_option("--noise-hi", deg_cfg.noise_std_hi, "Max noise std");
  deg->add_option("--compression", deg_cfg.compression_strength,
                  "Block-DCT compression strength (family b)");

  // shared config plumbing for train/eval/sample
  std::string config_path;
  KvFile overrides;
  auto add_config_opts = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key=value config file");
    cmd->add_option_function<std::string>(
        "--variant",
        [&](const std::string& v) { overrides.set("variant", v); },
        "forward_only|reverse_only|all_reverse|mixed");
    cmd->add_option_function<double>(
        "--gamma",
        [&](double v) { overrides.set_double("gamma", v); },
        "Distortion-perception exponent");
    cmd->add_option_function<uint64_t>(
        "--seed", [&](uint64_t v) { overrides.set_u64("seed", v); },
        "Run seed");
    cmd->add_option_function<int64_t>(
        "--iters", [&](int64_t v) { overrides.set_int("iterations", v); },
        "Training iterations");
  };

  auto* tr = app.add_subcommand("train", "Run reward-guided fine-tuning");
  std::string train_out = "run", train_resume;
  add_config_opts(tr);
  tr->add_option("--out", train_out, "Run output directory");
  tr->add_option("--resume", train_resume, "Checkpoint to resume from");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string eval_ckpt, eval_out = "eval_report.csv";
  add_config_opts(ev);
  ev->add_option("--checkpoint", eval_ckpt, "Checkpoint path")->required();
  ev->add_option("--out", eval_out, "Report CSV path");

  auto* an = app.add_subcommand("analyze", "Distribution-shift diagnostics");
  std::string an_hr, an_a, an_b, an_out = "analysis";
  int an_scale = 4;
  double an_bandwidth = 0.0;
  an->add_option("--hr", an_hr, "HR image directory")->required();
  an->add_option("--corpus-a", an_a, "Family-A LR directory")->required();
  an->add_option("--corpus-b", an_b, "Family-B LR directory")->required();
  an->add_option("--out", an_out, "Output directory for CSVs");
  an->add_option("--scale", an_scale, "LR-to-HR upsampling factor");
  an->add_option("--bandwidth", an_bandwidth,
                 "KDE bandwidth (0 = Silverman)");

  auto* sa = app.add_subcommand("sample", "Super-resolve LR images");
  std::string sample_ckpt, sample_lr, sample_out = "samples";
  bool sample_trace = false;
  add_config_opts(sa);
  sa->add_option("--checkpoint", sample_ckpt, "Checkpoint path")->required();
  sa->add_option("--lr", sample_lr, "LR image or directory")->required();
  sa->add_option("--out", sample_out, "Output directory");
  sa->add_flag("--trace", sample_trace, "Write per-step trace grids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    apply_threads(threads);
    if (gen->parsed())
      return cmd_gen_data(gen_out, gen_n, gen_size, gen_seed, gen_scale,
                          gen_ft);
    if (deg->parsed())
      return cmd_degrade(deg_in, deg_out, deg_family, deg_seed, deg_cfg);
    if (tr->parsed())
      return cmd_train(config_from_cli(config_path, overrides), train_out,
                       train_resume);
    if (ev->parsed())
      return cmd_eval(eval_ckpt, config_from_cli(config_path, overrides),
                      eval_out);
    if (an->parsed())
      return cmd_analyze(an_hr, an_a, an_b, an_out, an_scale, an_bandwidth);
    if (sa->parsed())
      return cmd_sample(sample_ckpt, sample_lr, sample_out,
                        config_from_cli(config_path, overrides), sample_trace);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
