#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "shapetask/grid.hpp"
#include "shapetask/phantom.hpp"
#include "shapetask/tensor.hpp"

namespace shapetask {

// One stored sample: the image, its label map, and the two derived targets.
struct Sample {
  Tensor image;          // 1×H×W f64
  LabelMap labels;       // i32 grid
  DistanceMap distance;  // H×W f64
  ContourMap contour;    // H×W u8
};

// On-disk split: `manifest` plus samples/<idx>.img/.lbl and
// targets/<idx>.dst/.ctr, every file a UTF-8 header + little-endian payload.
struct Dataset {
  std::string split;
  std::uint64_t seed = 0;
  int num_classes = 0;
  int height = 0;
  int width = 0;
  std::vector<Sample> samples;
};

// Tensor-file primitives (shared by all dataset payloads).
void write_tensor_f64(const std::filesystem::path& path, const std::vector<int>& shape,
                      const std::vector<double>& values);
void write_tensor_i32(const std::filesystem::path& path, const std::vector<int>& shape,
                      const std::vector<std::int32_t>& values);
void write_tensor_u8(const std::filesystem::path& path, const std::vector<int>& shape,
                     const std::vector<std::uint8_t>& values);
std::pair<std::vector<int>, std::vector<double>> read_tensor_f64(const std::filesystem::path& path);
std::pair<std::vector<int>, std::vector<std::int32_t>> read_tensor_i32(const std::filesystem::path& path);
std::pair<std::vector<int>, std::vector<std::uint8_t>> read_tensor_u8(const std::filesystem::path& path);

// Writes manifest + per-sample files; read(write(x)) is bitwise identity.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

// Derives the distance/contour targets of a sample from its labels.
Sample make_sample(Tensor image, LabelMap labels);

}  // namespace shapetask
