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

#include <zlib.h>

#include <chrono>
#include <string>
#include <vector>

#include "ldc/codec.hpp"
#include "ldc/eval/metrics.hpp"

namespace ldc::eval {

// Per-image, per-configuration evaluation row. bpp always reflects actual
// coded bytes, never the model estimate.
struct EvalRecord {
  std::string image_id;
  double lambda = 0;
  double bpp = 0;
  double psnr_db = 0;
  double ms_ssim = 0;
  bool ms_ssim_computed = false;  // needs >= 176px per side
  double lpips_like = 0;
  bool perceptual_computed = false;
  double encode_seconds = 0;
  double decode_seconds = 0;
  int timestep = 0;
  std::string gamma_summary;
};

inline std::string eval_records_csv(const std::vector<EvalRecord>& records) {
  std::string out =
      "image,lambda,bpp,psnr_db,ms_ssim,lpips_like,encode_seconds,decode_seconds,timestep,gamma\n";
  for (const auto& r : records) {
    out += r.image_id + "," + cat(r.lambda) + "," + cat(r.bpp) + "," + cat(r.psnr_db) + "," +
           (r.ms_ssim_computed ? cat(r.ms_ssim) : std::string("")) + "," +
           (r.perceptual_computed ? cat(r.lpips_like) : std::string("")) +
           "," + cat(r.encode_seconds) + "," + cat(r.decode_seconds) + "," + cat(r.timestep) +
           "," + r.gamma_summary + "\n";
  }
  return out;
}

namespace detail {

inline std::vector<uint8_t> deflate_bytes(const std::vector<uint8_t>& data) {
  uLongf bound = compressBound(static_cast<uLong>(data.size()));
  std::vector<uint8_t> out(bound);
  int rc = compress2(out.data(), &bound, data.data(), static_cast<uLong>(data.size()), 9);
  require(rc == Z_OK, ErrorKind::kInternal, "deflate failed: ", rc);
  out.resize(bound);
  return out;
}

}  // namespace detail

struct SweepPoint {
  std::string image_id;
  double quant_step = 0;
  int diffusion_steps = 0;
  double bpp = 0;
  double psnr_db = 0;
  double ms_ssim = 0;
  double lpips_like = 0;
  bool perceptual_computed = false;
};

inline std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::string out = "image,quant_step,diffusion_steps,bpp,psnr_db,ms_ssim,lpips_like\n";
  for (const auto& p : points)
    out += p.image_id + "," + cat(p.quant_step) + "," + cat(p.diffusion_steps) + "," +
           cat(p.bpp) + "," + cat(p.psnr_db) + "," + cat(p.ms_ssim) + "," +
           (p.perceptual_computed ? cat(p.lpips_like) : std::string("")) + "\n";
  return out;
}

// Baseline grid: uniform quantization of the latent with step sizes
// `quant_steps`, general-purpose deflate for the rate, and a chosen number
// of denoising steps at the decoder. No learned entropy model, no parameter
// estimation.
inline std::vector<SweepPoint> naive_sweep(const std::vector<ImageTensor>& images,
                                           const std::vector<std::string>& ids,
                                           AutoencoderBackbone& vae,
                                           const DenoiserBackbone& denoiser,
                                           const std::vector<double>& quant_steps,
                                           const std::vector<int>& diffusion_steps,
                                           const FeatureExtractor* fe = nullptr,
                                           bool with_ms_ssim = true) {
  require(images.size() == ids.size(), ErrorKind::kValidation, "naive_sweep: ids mismatch");
  require(!quant_steps.empty() && !diffusion_steps.empty(), ErrorKind::kValidation,
          "naive_sweep: empty grids");
  std::vector<SweepPoint> out;
  for (size_t i = 0; i < images.size(); ++i) {
    const ImageTensor& img = images[i];
    ImageTensor padded = pad_reflect_to_multiple(img, vae.downsample_factor());
    Tensor y = encode_image(vae, padded);
    const double pixels = static_cast<double>(img.height()) * img.width();
    for (double step : quant_steps) {
      require(step > 0, ErrorKind::kValidation, "naive_sweep: quant step must be positive");
      // Uniform quantization + int16 little-endian serialization + deflate.
      std::vector<int32_t> symbols(static_cast<size_t>(y.numel()));
      ByteWriter raw;
      for (int64_t k = 0; k < y.numel(); ++k) {
        double v = clamp(round_half_away(y[k] / step), -32768.0, 32767.0);
        symbols[static_cast<size_t>(k)] = static_cast<int32_t>(v);
        raw.u16(static_cast<uint16_t>(static_cast<int16_t>(v)));
      }
      std::vector<uint8_t> compressed = detail::deflate_bytes(raw.buffer());
      double bpp = static_cast<double>(compressed.size()) * 8.0 / pixels;
      Tensor y_hat(y.shape());
      for (int64_t k = 0; k < y.numel(); ++k)
        y_hat[k] = step * static_cast<double>(symbols[static_cast<size_t>(k)]);
      for (int t : diffusion_steps) {
        Tensor y0 = denoise_from(y_hat, t, denoiser);
        ImageTensor rec = crop_top_left(decode_latent(vae, y0), img.height(), img.width());
        SweepPoint p;
        p.image_id = ids[i];
        p.quant_step = step;
        p.diffusion_steps = t;
        p.bpp = bpp;
        p.psnr_db = psnr(img, rec);
        p.ms_ssim = with_ms_ssim ? ms_ssim(img, rec) : 0.0;
        if (fe != nullptr) {
          p.lpips_like = lpips_like(img, rec, *fe);
          p.perceptual_computed = true;
        }
        out.push_back(p);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Runtime / size benchmark.
// ---------------------------------------------------------------------------

struct BenchmarkReport {
  double mean_encode_seconds = 0;  // transform + parameter estimation + quantization
  double mean_decode_seconds = 0;  // dequantization + denoising loop + image decode
  double mean_entropy_encode_seconds = 0;
  double mean_entropy_decode_seconds = 0;
  int64_t trained_parameters = 0;
  int64_t backbone_parameters = 0;
  std::vector<int> timesteps;
  std::vector<int64_t> backbone_calls;
  int images = 0;
};

// Wall-clock timing per the usual protocol: entropy coding is timed
// separately and excluded from the encode/decode means.
inline BenchmarkReport benchmark(CodecContext& ctx, const std::vector<ImageTensor>& images,
                                 double lambda) {
  require(!images.empty(), ErrorKind::kValidation, "benchmark: no images");
  using Clock = std::chrono::steady_clock;
  auto seconds = [](Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };
  BenchmarkReport rep;
  rep.trained_parameters = ctx.trained_parameter_count();
  rep.backbone_parameters = ctx.backbone_parameter_count();
  rep.images = static_cast<int>(images.size());

  // Warm-up pass (allocators, caches).
  { auto warm = ctx.encode(images[0], lambda); (void)warm; }

  for (const ImageTensor& img : images) {
    ImageTensor padded = pad_reflect_to_multiple(img, ctx.vae().downsample_factor());

    auto t0 = Clock::now();
    Tensor y = encode_image(ctx.vae(), padded);
    PredictedParams params = ctx.pphi().predict_params(y, RateCondition(lambda));
    QuantizedLatent z = quantize(y, params.gamma, ctx.config().symbol_bound);
    auto t1 = Clock::now();
    auto comp = ctx.entropy_model().compress(z);
    auto t2 = Clock::now();

    const int t = timestep_to_discrete(params.tau, ctx.schedule().t_max());
    auto t3 = Clock::now();
    QuantizedLatent z2 = ctx.entropy_model().decompress(comp.hyper, comp.main, z.shape);
    auto t4 = Clock::now();
    QuantParams gamma = params.gamma;
    Tensor y_t = dequantize(z2, gamma);
    CountingBackbone counting(ctx.denoiser());
    Tensor y0 = denoise_from(y_t, t, counting);
    ImageTensor rec = decode_latent(ctx.vae(), y0);
    auto t5 = Clock::now();
    (void)rec;

    rep.mean_encode_seconds += seconds(t0, t1);
    rep.mean_entropy_encode_seconds += seconds(t1, t2);
    rep.mean_entropy_decode_seconds += seconds(t3, t4);
    rep.mean_decode_seconds += seconds(t4, t5);
    rep.timesteps.push_back(t);
    rep.backbone_calls.push_back(counting.calls());
  }
  const double n = static_cast<double>(images.size());
  rep.mean_encode_seconds /= n;
  rep.mean_decode_seconds /= n;
  rep.mean_entropy_encode_seconds /= n;
  rep.mean_entropy_decode_seconds /= n;
  return rep;
}

}  // namespace ldc::eval
