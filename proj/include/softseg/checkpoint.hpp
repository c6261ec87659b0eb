#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "softseg/train.hpp"
#include "softseg/unet.hpp"

namespace softseg {

// "SSWT", u32 LE tensor count, then per tensor: u32 LE rank, u32 LE dims,
// float64 LE values.
std::string encode_checkpoint(const Parameters& params);
Parameters decode_checkpoint(const std::string& bytes, const std::string& origin = "<memory>");
void write_checkpoint(const std::filesystem::path& path, const Parameters& params);
Parameters read_checkpoint(const std::filesystem::path& path);

// Training configuration document, also used as the checkpoint sidecar:
// { "model": {...}, "train": {..., "augment": {...}} }
nlohmann::json config_to_json(const TinyUNetConfig& model, const TrainConfig& train);
// Missing keys keep the values already in `model` / `train`.
void config_from_json(const nlohmann::json& doc, TinyUNetConfig& model, TrainConfig& train);

std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint);
std::filesystem::path history_path(const std::filesystem::path& checkpoint);

}  // namespace softseg
