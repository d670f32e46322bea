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

#pragma once

#include <cmath>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "ldc/autoencoder.hpp"
#include "ldc/common.hpp"
#include "ldc/config.hpp"
#include "ldc/core/image.hpp"
#include "ldc/diffusion.hpp"
#include "ldc/entropy/container.hpp"
#include "ldc/entropy/model.hpp"
#include "ldc/param_estimator.hpp"
#include "ldc/quantization.hpp"
#include "ldc/schedule.hpp"
#include "ldc/toy_denoiser.hpp"

namespace ldc {

struct CodecConfig {
  int latent_channels = 4;
  std::vector<int> vae_widths = {32, 64, 96};
  int denoiser_width = 48;
  int denoiser_blocks = 3;
  int denoiser_time_embed = 64;
  std::vector<int> pphi_widths = {64, 128, 256, 512};
  int entropy_width = 48;
  int hyper_channels = 8;
  bool context_model = false;
  ScheduleKind schedule_kind = ScheduleKind::kLinear;
  int t_max = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  int symbol_bound = kDefaultSymbolBound;
  // Feed sqrt(abar_t) * dequantized latent to the denoiser instead of the
  // latent itself. Off by default: the loop treats quantization error as the
  // noise and takes the dequantized latent as x_t directly.
  bool rescale_latent_for_denoise = false;
  // Whole-image processing refuses beyond this cap instead of tiling.
  int64_t max_pixels = 2048 * 2048;

  static CodecConfig from_config(const Config& c) {
    CodecConfig k;
    k.latent_channels = static_cast<int>(c.get_int("latent_channels", k.latent_channels));
    k.vae_widths = to_ints(c.get_doubles("vae_widths", {32, 64, 96}));
    require(k.vae_widths.size() == 3, ErrorKind::kValidation, "vae_widths needs 3 entries");
    k.denoiser_width = static_cast<int>(c.get_int("denoiser_width", k.denoiser_width));
    k.denoiser_blocks = static_cast<int>(c.get_int("denoiser_blocks", k.denoiser_blocks));
    k.denoiser_time_embed = static_cast<int>(c.get_int("denoiser_time_embed", k.denoiser_time_embed));
    k.pphi_widths = to_ints(c.get_doubles("pphi_widths", {64, 128, 256, 512}));
    k.entropy_width = static_cast<int>(c.get_int("entropy_width", k.entropy_width));
    k.hyper_channels = static_cast<int>(c.get_int("hyper_channels", k.hyper_channels));
    k.context_model = c.get_bool("context_model", k.context_model);
    k.schedule_kind = c.get_str("schedule_kind", "linear") == "scaled_linear"
                          ? ScheduleKind::kScaledLinear
                          : ScheduleKind::kLinear;
    k.t_max = static_cast<int>(c.get_int("t_max", k.t_max));
    k.beta_start = c.get_double("beta_start", k.beta_start);
    k.beta_end = c.get_double("beta_end", k.beta_end);
    k.symbol_bound = static_cast<int>(c.get_int("symbol_bound", k.symbol_bound));
    k.rescale_latent_for_denoise = c.get_bool("rescale_latent", k.rescale_latent_for_denoise);
    k.max_pixels = c.get_int("max_pixels", k.max_pixels);
    return k;
  }

  Config to_config() const {
    Config c;
    c.set("latent_channels", std::to_string(latent_channels));
    c.set("vae_widths", cat(vae_widths[0], ",", vae_widths[1], ",", vae_widths[2]));
    c.set("denoiser_width", std::to_string(denoiser_width));
    c.set("denoiser_blocks", std::to_string(denoiser_blocks));
    c.set("denoiser_time_embed", std::to_string(denoiser_time_embed));
    std::string pw;
    for (size_t i = 0; i < pphi_widths.size(); ++i)
      pw += (i ? "," : "") + std::to_string(pphi_widths[i]);
    c.set("pphi_widths", pw);
    c.set("entropy_width", std::to_string(entropy_width));
    c.set("hyper_channels", std::to_string(hyper_channels));
    c.set("context_model", context_model ? "true" : "false");
    c.set("schedule_kind", std::string(to_string(schedule_kind)));
    c.set("t_max", std::to_string(t_max));
    c.set("beta_start", cat(beta_start));
    c.set("beta_end", cat(beta_end));
    c.set("symbol_bound", std::to_string(symbol_bound));
    c.set("rescale_latent", rescale_latent_for_denoise ? "true" : "false");
    c.set("max_pixels", std::to_string(max_pixels));
    return c;
  }

 private:
  static std::vector<int> to_ints(const std::vector<double>& v) {
    std::vector<int> out;
    out.reserve(v.size());
    for (double d : v) out.push_back(static_cast<int>(d));
    return out;
  }
};

struct EncodeResult {
  std::vector<uint8_t> bytes;
  StreamHeader header;
  PredictedParams params;
  int timestep = 0;
  double bit_estimate = 0;
  double bpp = 0;
  int64_t clamped = 0;
  bool lambda_extrapolated = false;
};

struct DecodeResult {
  ImageTensor image;
  int timestep = 0;
  int64_t backbone_calls = 0;
};

// Loaded model bundle plus the schedule: everything one command needs. All
// components must agree on C, f, T_max; validated on construction.
class CodecContext {
 public:
  explicit CodecContext(const CodecConfig& cfg) : cfg_(cfg) {
    schedule_ = build_schedule(cfg.schedule_kind, cfg.t_max, cfg.beta_start, cfg.beta_end);
    ToyVaeConfig vc;
    vc.latent_channels = cfg.latent_channels;
    vc.widths = {cfg.vae_widths[0], cfg.vae_widths[1], cfg.vae_widths[2]};
    vae_ = std::make_unique<ToyVae>(vc);
    ToyDenoiserConfig dc;
    dc.latent_channels = cfg.latent_channels;
    dc.width = cfg.denoiser_width;
    dc.blocks = cfg.denoiser_blocks;
    dc.time_embed_dim = cfg.denoiser_time_embed;
    denoiser_ = std::make_unique<ToyDenoiser>(schedule_, dc);
    ParamEstimatorConfig pc;
    pc.latent_channels = cfg.latent_channels;
    pc.widths = cfg.pphi_widths;
    pphi_ = std::make_unique<ParamEstimator>(pc);
    entropy::EntropyModelConfig ec;
    ec.latent_channels = cfg.latent_channels;
    ec.width = cfg.entropy_width;
    ec.hyper_channels = cfg.hyper_channels;
    ec.symbol_bound = cfg.symbol_bound;
    ec.context_model = cfg.context_model;
    entropy_ = std::make_unique<entropy::EntropyModel>(ec);
    validate();
  }

  static CodecContext load(const std::string& dir) {
    namespace fs = std::filesystem;
    require(fs::is_directory(dir), ErrorKind::kIo, "checkpoint directory not found: ", dir);
    Config c = Config::from_file((fs::path(dir) / "codec.cfg").string());
    CodecContext ctx(CodecConfig::from_config(c));
    ctx.vae_->load((fs::path(dir) / "vae.ldcw").string());
    ctx.denoiser_->load((fs::path(dir) / "denoiser.ldcw").string());
    ctx.pphi_->load((fs::path(dir) / "pphi.ldcw").string());
    ctx.entropy_->load((fs::path(dir) / "entropy.ldcw").string());
    return ctx;
  }

  void save(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_file_text((fs::path(dir) / "codec.cfg").string(), cfg_.to_config().to_string());
    vae_->save((fs::path(dir) / "vae.ldcw").string());
    denoiser_->save((fs::path(dir) / "denoiser.ldcw").string());
    pphi_->save((fs::path(dir) / "pphi.ldcw").string());
    entropy_->save((fs::path(dir) / "entropy.ldcw").string());
  }

  const CodecConfig& config() const { return cfg_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  ToyVae& vae() { return *vae_; }
  ToyDenoiser& denoiser() { return *denoiser_; }
  ParamEstimator& pphi() { return *pphi_; }
  entropy::EntropyModel& entropy_model() { return *entropy_; }

  EncodeResult encode(const ImageTensor& img, double lambda) {
    require(img.defined(), ErrorKind::kValidation, "undefined image");
    const int64_t pixels = static_cast<int64_t>(img.height()) * img.width();
    require(pixels <= cfg_.max_pixels, ErrorKind::kValidation, "image has ", pixels,
            " pixels, above the configured cap of ", cfg_.max_pixels,
            "; crop or raise max_pixels");
    RateCondition cond(lambda);
    ImageTensor padded = pad_reflect_to_multiple(img, vae_->downsample_factor());
    Tensor y = encode_image(*vae_, padded);
    PredictedParams params = pphi_->predict_params(y, cond);
    const int t = timestep_to_discrete(params.tau, schedule_.t_max());
    QuantizedLatent z = quantize(y, params.gamma, cfg_.symbol_bound);
    auto comp = entropy_->compress(z);

    CompressedStream s;
    s.header.orig_height = static_cast<uint32_t>(img.height());
    s.header.orig_width = static_cast<uint32_t>(img.width());
    s.header.latent_channels = static_cast<uint8_t>(cfg_.latent_channels);
    s.header.downsample_factor = static_cast<uint8_t>(vae_->downsample_factor());
    s.header.t_max = static_cast<uint16_t>(schedule_.t_max());
    s.header.schedule_kind = static_cast<uint8_t>(cfg_.schedule_kind);
    s.header.beta_start = static_cast<float>(cfg_.beta_start);
    s.header.beta_end = static_cast<float>(cfg_.beta_end);
    s.header.timestep = static_cast<uint16_t>(t);
    s.header.lambda_index = kCustomLambdaIndex;
    const auto& lset = trained_lambda_set();
    for (size_t i = 0; i < lset.size(); ++i)
      if (lset[i] == lambda) s.header.lambda_index = static_cast<uint8_t>(i);
    s.header.symbol_bound = static_cast<uint16_t>(cfg_.symbol_bound);
    s.header.gamma_log_scale = params.gamma.log_scale;
    s.header.gamma_offset = params.gamma.offset;
    s.hyper_payload = comp.hyper;
    s.main_payload = comp.main;

    EncodeResult out;
    out.bytes = serialize_stream(s);
    out.header = s.header;
    out.params = params;
    out.timestep = t;
    out.bit_estimate = comp.bit_estimate;
    out.clamped = z.clamped + comp.hyper_clamped;
    out.bpp = static_cast<double>(out.bytes.size()) * 8.0 / static_cast<double>(pixels);
    out.lambda_extrapolated = !is_trained_lambda(lambda);
    return out;
  }

  DecodeResult decode(const std::vector<uint8_t>& bytes) {
    CompressedStream s = parse_stream(bytes);
    const StreamHeader& h = s.header;
    require(h.latent_channels == cfg_.latent_channels, ErrorKind::kFormat,
            "stream latent channels ", static_cast<int>(h.latent_channels),
            " do not match checkpoint (", cfg_.latent_channels, ")");
    require(h.downsample_factor == vae_->downsample_factor(), ErrorKind::kFormat,
            "stream downsample factor mismatch");
    require(h.t_max == schedule_.t_max() &&
                h.schedule_kind == static_cast<uint8_t>(cfg_.schedule_kind) &&
                h.beta_start == static_cast<float>(cfg_.beta_start) &&
                h.beta_end == static_cast<float>(cfg_.beta_end),
            ErrorKind::kFormat, "stream schedule does not match checkpoint");
    require(h.symbol_bound == cfg_.symbol_bound, ErrorKind::kFormat,
            "stream symbol bound mismatch");

    QuantizedLatent z = entropy_->decompress(
        s.hyper_payload, s.main_payload,
        {cfg_.latent_channels, h.latent_height(), h.latent_width()});
    QuantParams gamma{h.gamma_log_scale, h.gamma_offset};
    Tensor y_t = dequantize(z, gamma);
    const int t = h.timestep;
    if (cfg_.rescale_latent_for_denoise && t > 0) {
      const double sa = std::sqrt(schedule_.alpha_bar(t));
      for (int64_t i = 0; i < y_t.numel(); ++i) y_t[i] *= sa;
    }
    CountingBackbone counting(*denoiser_);
    Tensor y0 = denoise_from(y_t, t, counting);
    ImageTensor full = decode_latent(*vae_, y0);
    DecodeResult out;
    out.image = crop_top_left(full, static_cast<int>(h.orig_height), static_cast<int>(h.orig_width));
    out.timestep = t;
    out.backbone_calls = counting.calls();
    return out;
  }

  int64_t trained_parameter_count() const {
    return pphi_->parameter_count() + entropy_->parameter_count();
  }
  int64_t backbone_parameter_count() const {
    return vae_->parameter_count() + denoiser_->parameter_count();
  }

 private:
  void validate() const {
    require(vae_->latent_channels() == cfg_.latent_channels &&
                denoiser_->latent_channels() == cfg_.latent_channels &&
                pphi_->latent_channels() == cfg_.latent_channels &&
                entropy_->config().latent_channels == cfg_.latent_channels,
            ErrorKind::kValidation, "component channel counts disagree");
    require(denoiser_->schedule().t_max() == schedule_.t_max(), ErrorKind::kValidation,
            "backbone schedule length disagrees");
  }

  CodecConfig cfg_;
  NoiseSchedule schedule_;
  std::unique_ptr<ToyVae> vae_;
  std::unique_ptr<ToyDenoiser> denoiser_;
  std::unique_ptr<ParamEstimator> pphi_;
  std::unique_ptr<entropy::EntropyModel> entropy_;
};

}  // namespace ldc
