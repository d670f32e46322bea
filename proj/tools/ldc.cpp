// Copyright 2026 The LDC Codec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "ldc/codec.hpp"
#include "ldc/core/parallel.hpp"
#include "ldc/core/synthetic.hpp"
#include "ldc/eval/elo.hpp"
#include "ldc/eval/metrics.hpp"
#include "ldc/eval/plots.hpp"
#include "ldc/eval/sweep.hpp"
#include "ldc/training.hpp"

namespace {

namespace fs = std::filesystem;
using namespace ldc;

// Exit codes: 0 success, 2 validation/usage, 3 I/O, 4 stream/format,
// 5 internal.
int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation: return 2;
    case ErrorKind::kIo: return 3;
    case ErrorKind::kFormat: return 4;
    case ErrorKind::kInternal: return 5;
  }
  return 5;
}

std::string resolve_checkpoint_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  const char* env = std::getenv("LDC_CHECKPOINT_DIR");
  require(env != nullptr && *env != '\0', ErrorKind::kValidation,
          "no checkpoint directory: pass --checkpoint-dir or set LDC_CHECKPOINT_DIR");
  return env;
}

void check_device(const std::string& device) {
  require(device == "cpu", ErrorKind::kValidation, "unsupported --device '", device,
          "' (this build is CPU-only)");
}

std::string gamma_summary(const QuantParams& g) {
  std::string s;
  for (int c = 0; c < g.channels(); ++c) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", g.scale(c));
    s += std::string(c ? ";" : "") + buf;
  }
  return s;
}

struct CommonArgs {
  std::string checkpoint_dir;
  std::string device = "cpu";
  uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--checkpoint-dir", args.checkpoint_dir,
                  "Checkpoint directory (or env LDC_CHECKPOINT_DIR)");
  cmd->add_option("--device", args.device, "Compute device (cpu)");
  cmd->add_option("--seed", args.seed, "Random seed for seeded commands");
}

int cmd_encode(const CommonArgs& common, const std::string& in, const std::string& out,
               double lambda) {
  check_device(common.device);
  CodecContext ctx = CodecContext::load(resolve_checkpoint_dir(common.checkpoint_dir));
  ImageTensor img = load_image(in);
  EncodeResult enc = ctx.encode(img, lambda);
  if (enc.lambda_extrapolated)
    std::cerr << "warning: lambda " << lambda
              << " is outside the trained set {1, 5, 10, 20}; extrapolating\n";
  write_file_bytes(out, enc.bytes);
  std::cout << "wrote " << out << ": " << enc.bytes.size() << " bytes, bpp=" << enc.bpp
            << ", t=" << enc.timestep << " (tau=" << enc.params.tau << ")"
            << ", scales=" << gamma_summary(enc.params.gamma)
            << ", clamped=" << enc.clamped
            << ", estimated_bits=" << enc.bit_estimate << "\n";
  return 0;
}

int cmd_decode(const CommonArgs& common, const std::string& in, const std::string& out) {
  check_device(common.device);
  CodecContext ctx = CodecContext::load(resolve_checkpoint_dir(common.checkpoint_dir));
  DecodeResult dec = ctx.decode(read_file_bytes(in));
  save_image(out, dec.image);
  std::cout << "wrote " << out << ": " << dec.image.width() << "x" << dec.image.height()
            << ", denoising steps=" << dec.timestep
            << ", backbone calls=" << dec.backbone_calls << "\n";
  return 0;
}

int cmd_train(const CommonArgs& common, const std::string& data_dir,
              const std::string& config_path, const std::string& stage, int steps_override) {
  check_device(common.device);
  std::string ckpt = resolve_checkpoint_dir(common.checkpoint_dir);
  Config file_cfg = config_path.empty() ? Config() : Config::from_file(config_path);
  if (common.seed != 0) file_cfg.set("seed", std::to_string(common.seed));
  TrainConfig tcfg = TrainConfig::from_config(file_cfg);
  if (steps_override > 0) tcfg.steps = steps_override;

  std::unique_ptr<CodecContext> ctx;
  if (fs::exists(fs::path(ckpt) / "codec.cfg")) {
    std::cout << "resuming from " << ckpt << "\n";
    ctx = std::make_unique<CodecContext>(CodecContext::load(ckpt));
  } else {
    ctx = std::make_unique<CodecContext>(CodecConfig::from_config(file_cfg));
  }
  Dataset data = Dataset::load_dir(data_dir);
  std::cout << "corpus: " << data.size() << " images\n";
  fs::create_directories(ckpt);
  MetricsLog log((fs::path(ckpt) / "metrics.jsonl").string());

  const bool foundation = tcfg.backbone_mode == "foundation-frozen";
  auto run_stage = [&](const std::string& name, auto&& fn) {
    auto t0 = std::chrono::steady_clock::now();
    StageReport rep = fn();
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "stage " << name << ": " << rep.steps_run << " steps ("
              << rep.steps_skipped << " skipped) in " << secs
              << "s, final loss " << rep.final_loss << "\n";
    ctx->save(ckpt);
  };
  if ((stage == "all" || stage == "vae") && !foundation)
    run_stage("vae", [&] { return train_vae(*ctx, data, tcfg, &log); });
  if ((stage == "all" || stage == "denoiser") && !foundation)
    run_stage("denoiser", [&] { return train_denoiser(*ctx, data, tcfg, &log); });
  if (foundation && (stage == "vae" || stage == "denoiser"))
    std::cout << "backbone_mode=foundation-frozen: backbone stages skipped\n";
  if (stage == "all" || stage == "codec")
    run_stage("codec", [&] { return train_codec(*ctx, data, tcfg, &log); });
  std::cout << "checkpoints written to " << ckpt << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& common, const std::string& data_dir, const std::string& out_csv,
             const std::vector<double>& lambdas, const std::string& plot_path,
             const std::string& stream_dir, bool run_benchmark, int workers) {
  check_device(common.device);
  CodecContext ctx = CodecContext::load(resolve_checkpoint_dir(common.checkpoint_dir));
  auto paths = list_images(data_dir);
  require(!paths.empty(), ErrorKind::kIo, "no images under ", data_dir);
  require(!lambdas.empty(), ErrorKind::kValidation, "need at least one lambda");
  eval::TinyFeatureNet fe;
  std::string streams = stream_dir;
  if (streams.empty()) streams = (fs::temp_directory_path() / "ldc_eval_streams").string();
  fs::create_directories(streams);

  struct Slot {
    std::vector<eval::EvalRecord> records;
    ImageTensor original;
    std::vector<ImageTensor> recons;  // one per lambda
  };
  std::vector<Slot> slots(paths.size());
  parallel_for(static_cast<int64_t>(paths.size()), workers, [&](int64_t i, int) {
    Slot& slot = slots[static_cast<size_t>(i)];
    ImageTensor img = load_image(paths[static_cast<size_t>(i)]);
    slot.original = img;
    std::string id = fs::path(paths[static_cast<size_t>(i)]).stem().string();
    for (size_t li = 0; li < lambdas.size(); ++li) {
      using Clock = std::chrono::steady_clock;
      auto t0 = Clock::now();
      EncodeResult enc = ctx.encode(img, lambdas[li]);
      auto t1 = Clock::now();
      std::string stream_path = (fs::path(streams) / cat(id, "_l", lambdas[li], ".ldc")).string();
      write_file_bytes(stream_path, enc.bytes);
      // bpp from the real file on disk, not the in-memory estimate.
      auto file_bytes = static_cast<double>(fs::file_size(stream_path));
      auto t2 = Clock::now();
      DecodeResult dec = ctx.decode(read_file_bytes(stream_path));
      auto t3 = Clock::now();
      eval::EvalRecord r;
      r.image_id = id;
      r.lambda = lambdas[li];
      r.bpp = file_bytes * 8.0 / (static_cast<double>(img.height()) * img.width());
      r.psnr_db = eval::psnr(img, dec.image);
      if (std::min(img.height(), img.width()) >= 176) {
        r.ms_ssim = eval::ms_ssim(img, dec.image);
        r.ms_ssim_computed = true;
      }
      r.lpips_like = eval::lpips_like(img, dec.image, fe);
      r.perceptual_computed = true;
      r.encode_seconds = std::chrono::duration<double>(t1 - t0).count();
      r.decode_seconds = std::chrono::duration<double>(t3 - t2).count();
      r.timestep = dec.timestep;
      r.gamma_summary = gamma_summary(enc.params.gamma);
      slot.records.push_back(r);
      slot.recons.push_back(dec.image);
    }
  });

  std::vector<eval::EvalRecord> records;
  for (auto& s : slots)
    for (auto& r : s.records) records.push_back(r);
  write_file_text(out_csv, eval::eval_records_csv(records));
  std::cout << "wrote " << records.size() << " records to " << out_csv << "\n";

  std::vector<eval::PlotSeries> series = {{"ours", {}}};
  for (size_t li = 0; li < lambdas.size(); ++li) {
    double bpp = 0, ps = 0, lp = 0, ms = 0, tfrac = 0;
    int ms_count = 0, n = 0;
    std::vector<ImageTensor> originals, recons;
    for (auto& s : slots) {
      originals.push_back(s.original);
      recons.push_back(s.recons[li]);
    }
    for (auto& s : slots)
      for (auto& r : s.records)
        if (r.lambda == lambdas[li]) {
          bpp += r.bpp;
          ps += r.psnr_db;
          lp += r.lpips_like;
          if (r.ms_ssim_computed) {
            ms += r.ms_ssim;
            ++ms_count;
          }
          tfrac += static_cast<double>(r.timestep) / ctx.schedule().t_max();
          ++n;
        }
    eval::PerceptualScores fid = eval::perceptual_scores(originals, recons, &fe);
    std::cout << "lambda=" << lambdas[li] << ": mean bpp=" << bpp / n
              << ", mean psnr=" << ps / n;
    if (ms_count) std::cout << ", mean ms-ssim=" << ms / ms_count;
    std::cout << ", mean lpips-like=" << lp / n;
    if (fid.fid_computed)
      std::cout << ", fid-like=" << fid.fid_like << " (n=" << fid.count_x << ")";
    std::cout << ", mean t/T=" << tfrac / n << "\n";
    series[0].points.push_back({bpp / n, ps / n});
  }
  if (!plot_path.empty()) {
    eval::write_plot(plot_path, eval::rd_plot_svg("rate-distortion", "bpp", "PSNR (dB)", series));
    std::cout << "wrote plot " << plot_path << "\n";
  }

  if (run_benchmark) {
    std::vector<ImageTensor> imgs;
    for (auto& s : slots) imgs.push_back(s.original);
    eval::BenchmarkReport rep = eval::benchmark(ctx, imgs, lambdas.front());
    std::cout << "benchmark over " << rep.images << " images (entropy coding excluded):\n"
              << "  mean encode: " << rep.mean_encode_seconds << " s"
              << " (+" << rep.mean_entropy_encode_seconds << " s entropy)\n"
              << "  mean decode: " << rep.mean_decode_seconds << " s"
              << " (+" << rep.mean_entropy_decode_seconds << " s entropy)\n"
              << "  trained module parameters: " << rep.trained_parameters << "\n"
              << "  frozen backbone parameters: " << rep.backbone_parameters << "\n";
    for (size_t i = 0; i < rep.timesteps.size(); ++i)
      require(rep.backbone_calls[i] == rep.timesteps[i], ErrorKind::kInternal,
              "backbone call count diverged from header t");
  }
  return 0;
}

int cmd_sweep(const CommonArgs& common, const std::string& data_dir, const std::string& out_csv,
              const std::vector<double>& quant_steps, const std::vector<int>& diffusion_steps,
              const std::string& plot_path) {
  check_device(common.device);
  CodecContext ctx = CodecContext::load(resolve_checkpoint_dir(common.checkpoint_dir));
  auto paths = list_images(data_dir);
  require(!paths.empty(), ErrorKind::kIo, "no images under ", data_dir);
  std::vector<ImageTensor> images;
  std::vector<std::string> ids;
  bool all_large = true;
  for (const auto& p : paths) {
    images.push_back(load_image(p));
    ids.push_back(fs::path(p).stem().string());
    all_large = all_large && std::min(images.back().height(), images.back().width()) >= 176;
  }
  eval::TinyFeatureNet fe;
  auto points = eval::naive_sweep(images, ids, ctx.vae(), ctx.denoiser(), quant_steps,
                                  diffusion_steps, &fe, all_large);
  write_file_text(out_csv, eval::sweep_csv(points));
  std::cout << "wrote " << points.size() << " sweep points to " << out_csv << "\n";
  if (!plot_path.empty()) {
    std::vector<eval::PlotSeries> series;
    for (int t : diffusion_steps) {
      eval::PlotSeries s;
      s.label = cat("t=", t);
      for (const auto& p : points)
        if (p.diffusion_steps == t) s.points.push_back({p.bpp, p.psnr_db});
      series.push_back(std::move(s));
    }
    eval::write_plot(plot_path,
                     eval::rd_plot_svg("naive LDM baseline sweep", "bpp", "PSNR (dB)", series));
    std::cout << "wrote plot " << plot_path << "\n";
  }
  return 0;
}

int cmd_elo(const CommonArgs& common, const std::string& log_path, const std::string& out_csv,
            const std::string& mode, int iterations, double k_factor, double initial,
            const std::string& plot_path) {
  std::string text;
  {
    auto bytes = read_file_bytes(log_path);
    text.assign(bytes.begin(), bytes.end());
  }
  auto log = eval::parse_comparison_csv(text);
  eval::EloConfig cfg;
  cfg.iterations = iterations;
  cfg.k_factor = k_factor;
  cfg.initial_rating = initial;
  cfg.seed = common.seed;
  if (mode == "per_comparison") {
    cfg.mode = eval::EloTournamentMode::kPerComparison;
  } else if (mode == "per_participant") {
    cfg.mode = eval::EloTournamentMode::kPerParticipant;
  } else {
    fail(ErrorKind::kValidation, "unknown mode '", mode,
         "' (use per_comparison or per_participant)");
  }
  eval::EloResult result = eval::elo_rank(log, cfg);
  std::string csv = eval::elo_csv(result);
  if (!out_csv.empty()) write_file_text(out_csv, csv);
  std::cout << csv;
  if (!plot_path.empty()) {
    eval::write_plot(plot_path, eval::elo_box_plot_svg(cat("Elo ratings (", mode, ")"), result));
    std::cout << "wrote plot " << plot_path << "\n";
  }
  return 0;
}

int cmd_datagen(const CommonArgs& common, const std::string& out_dir, int count, int size) {
  require(count > 0 && size >= 16, ErrorKind::kValidation, "datagen: need count > 0, size >= 16");
  auto paths = write_synthetic_corpus(out_dir, count, size, size, common.seed);
  std::cout << "wrote " << paths.size() << " images to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ldc: latent-diffusion lossy image codec"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string in_path, out_path, data_dir, config_path, stage = "all";
  std::string out_csv, plot_path, stream_dir, log_path, mode = "per_comparison";
  double lambda = 5.0;
  std::vector<double> lambdas = {1, 5, 10, 20};
  std::vector<double> quant_steps = {2.0, 1.0, 0.5, 0.25};
  std::vector<int> diffusion_steps = {0, 2, 5, 10};
  int steps_override = -1, iterations = 10000, count = 512, size = 64, workers = 2;
  double k_factor = 32.0, initial_rating = 1000.0;
  bool run_benchmark = false;

  auto* enc = app.add_subcommand("encode", "Compress an image to an .ldc stream");
  add_common(enc, common);
  enc->add_option("--in", in_path, "Input image (.png/.ppm)")->required();
  enc->add_option("--out", out_path, "Output .ldc path")->required();
  enc->add_option("--lambda", lambda, "Rate-distortion trade-off (trained set: 1, 5, 10, 20)");

  auto* dec = app.add_subcommand("decode", "Decompress an .ldc stream to an image");
  add_common(dec, common);
  dec->add_option("--in", in_path, "Input .ldc path")->required();
  dec->add_option("--out", out_path, "Output image (.png/.ppm)")->required();

  auto* trn = app.add_subcommand("train", "Train the toy backbone and/or the codec");
  add_common(trn, common);
  trn->add_option("--data", data_dir, "Training image directory")->required();
  trn->add_option("--config", config_path, "Plain-text key=value training/model config");
  trn->add_option("--stage", stage, "all | vae | denoiser | codec");
  trn->add_option("--steps", steps_override, "Override codec-stage step count");

  auto* evl = app.add_subcommand("eval", "Encode/decode a directory and emit EvalRecords");
  add_common(evl, common);
  evl->add_option("--data", data_dir, "Evaluation image directory")->required();
  evl->add_option("--out-csv", out_csv, "Output CSV path")->required();
  evl->add_option("--lambdas", lambdas, "Lambda values to evaluate");
  evl->add_option("--plot", plot_path, "Optional RD plot (.svg)");
  evl->add_option("--streams", stream_dir, "Directory to keep .ldc streams");
  evl->add_option("--workers", workers, "Worker threads over images");
  evl->add_flag("--benchmark", run_benchmark, "Also run the runtime/size benchmark");

  auto* swp = app.add_subcommand("sweep", "Naive quantize+deflate+denoise baseline grid");
  add_common(swp, common);
  swp->add_option("--data", data_dir, "Image directory")->required();
  swp->add_option("--out-csv", out_csv, "Output CSV path")->required();
  swp->add_option("--quant-steps", quant_steps, "Uniform quantization step sizes");
  swp->add_option("--diffusion-steps", diffusion_steps, "Denoising step counts");
  swp->add_option("--plot", plot_path, "Optional plot (.svg)");

  auto* elo = app.add_subcommand("elo", "Rank methods from a 2AFC comparison log");
  add_common(elo, common);
  elo->add_option("--log", log_path, "Comparison log CSV")->required();
  elo->add_option("--out-csv", out_csv, "Output CSV path");
  elo->add_option("--mode", mode, "per_comparison | per_participant");
  elo->add_option("--iterations", iterations, "Monte-Carlo iterations");
  elo->add_option("--k-factor", k_factor, "Elo K-factor");
  elo->add_option("--initial-rating", initial_rating, "Starting rating");
  elo->add_option("--plot", plot_path, "Optional box plot (.svg)");

  auto* gen = app.add_subcommand("datagen", "Generate a synthetic image corpus");
  add_common(gen, common);
  gen->add_option("--out", out_path, "Output directory")->required();
  gen->add_option("--count", count, "Number of images");
  gen->add_option("--size", size, "Image side length");

  try {
    app.parse(argc, argv);
    if (enc->parsed()) return cmd_encode(common, in_path, out_path, lambda);
    if (dec->parsed()) return cmd_decode(common, in_path, out_path);
    if (trn->parsed()) return cmd_train(common, data_dir, config_path, stage, steps_override);
    if (evl->parsed())
      return cmd_eval(common, data_dir, out_csv, lambdas, plot_path, stream_dir, run_benchmark,
                      workers);
    if (swp->parsed())
      return cmd_sweep(common, data_dir, out_csv, quant_steps, diffusion_steps, plot_path);
    if (elo->parsed())
      return cmd_elo(common, log_path, out_csv, mode, iterations, k_factor, initial_rating,
                     plot_path);
    if (gen->parsed()) return cmd_datagen(common, out_path, count, size);
    return 2;
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 5;
  }
}
