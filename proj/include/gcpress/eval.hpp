#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "gcpress/codec.hpp"
#include "gcpress/data.hpp"

namespace gcpress {

struct EvalRow {
  std::string file;
  double bpp = 0;  // total, side information included
  double psnr = 0;
  double ms_ssim = 0;
  BppReport bits;
};

struct EvalSummary {
  std::vector<EvalRow> rows;
  double mean_bpp = 0;
  double mean_psnr = 0;  // infinite rows are skipped
  double mean_ms_ssim = 0;
  double mean_mse = 0;   // 0-255 scale
};

/// Compresses and reconstructs every sample. SC sessions preserve every code
/// position and need the sample label maps. Samples are processed in
/// parallel when more than one thread is configured; rows keep input order.
EvalSummary evaluate_dataset(const CodecSession& session, const Dataset& data);

/// PNG files of `dir` in name order. SC sessions read "<stem>.labels.txt"
/// next to each image.
EvalSummary evaluate_directory(const CodecSession& session, const std::filesystem::path& dir);

/// "file,bpp,psnr,ms_ssim" with one row per image.
std::string eval_csv(const EvalSummary& summary);

/// Code of i.i.d. uniform symbols for a width x height image.
CodeGrid uniform_code(const CodecSession& session, int width, int height, std::mt19937_64& rng);
/// G on a uniform code (GC sessions only).
Image sample_uniform_latent(const CodecSession& session, int width, int height, std::mt19937_64& rng);

}  // namespace gcpress
