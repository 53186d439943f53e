#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bird/denoiser.hpp"
#include "bird/features.hpp"
#include "bird/image.hpp"
#include "bird/optimizer.hpp"

namespace bird {

// PGM (P5) for single-channel, PPM (P6) for 3-channel images, maxval 255,
// pixels mapped linearly between [0,255] and [0,1].
Image read_image(const std::string& path);
void write_image(const std::string& path, const Image& img);

// Raw float tensor sidecar: magic "BFT1", u32 rank, u32 dims[rank],
// f32 little-endian payload. Lossless where PGM quantization is not.
void write_tensor_ft(const std::string& path, const Tensor& t);
Tensor read_tensor_ft(const std::string& path);

// Checkpoint: magic "BIRD", u32 version, u32 entry count, then per entry
// u32 name length + name bytes + u32 rank + u32 dims + f32 LE payload,
// and a trailing CRC32 over all payload bytes. Load is bitwise and CRC
// mismatches are hard errors.
struct Checkpoint {
  uint32_t version = 1;
  int64_t iteration = 0;
  DenoiserParams params;
  AdamState opt;
  FrozenFeatures feats;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Polynomial 0xEDB88320, as used by zlib/png.
uint32_t crc32(const uint8_t* data, size_t n, uint32_t crc = 0);
uint32_t crc32_of_floats(const std::vector<float>& v, uint32_t crc = 0);

std::string read_text_file(const std::string& path);
// Write-temp-then-rename.
void write_text_file_atomic(const std::string& path,
                            const std::string& content);
void write_binary_file_atomic(const std::string& path,
                              const std::vector<uint8_t>& bytes);

void ensure_directory(const std::string& path);

}  // namespace bird
