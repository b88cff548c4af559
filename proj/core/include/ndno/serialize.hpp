#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ndno/diffeo.hpp"
#include "ndno/fno.hpp"
#include "ndno/stress.hpp"
#include "ndno/train.hpp"

namespace ndno::io {

using json = nlohmann::json;

// ComponentSpec <-> JSON (snake_case, dims as a 3-element array, units mm)
json spec_to_json(const ComponentSpec& spec);
ComponentSpec spec_from_json(const json& j);

// Sample files: 8-byte magic "NDNOSMP1", u64-LE header length, UTF-8 JSON
// header, then raw little-endian f64 arrays in header-declared order.
void write_sample(const std::string& path, const stress::Sample& sample);
stress::Sample read_sample(const std::string& path);

struct DatasetEntry {
    std::string path;   // relative to the dataset directory
    std::string split;  // "", "train" or "test"
};

struct DatasetManifest {
    std::vector<DatasetEntry> files;
    std::string family;
    std::uint64_t seed = 0;
    json extra;  // run metadata block
};

void write_dataset(const std::string& dir, const std::vector<stress::Sample>& samples,
                   DatasetManifest manifest);
DatasetManifest read_dataset_manifest(const std::string& dir);
std::vector<stress::Sample> read_dataset(const std::string& dir);

// SHA-256 over the sample files in manifest order (file contents concatenated).
std::string dataset_hash(const std::string& dir);

// Checkpoints: magic, u64-LE header length, JSON header (block names, shapes,
// dtype "f64le"), then raw arrays in header order; complex spectral blocks
// are stored interleaved re/im.
void write_diffeo_checkpoint(const std::string& path, const diffeo::DiffeoParams& params);
diffeo::DiffeoParams read_diffeo_checkpoint(const std::string& path);
void write_operator_checkpoint(const std::string& path, const fno::OperatorParams& params);
fno::OperatorParams read_operator_checkpoint(const std::string& path);

json config_to_json(const train::TrainConfig& cfg);
train::TrainConfig config_from_json(const json& j);

void write_loss_history_csv(const std::string& path, const train::LossHistory& history);

json metrics_to_json(const train::Metrics& metrics);
void write_metrics(const std::string& json_path, const std::string& csv_path,
                   const train::Metrics& metrics);

struct RunManifest {
    std::string command;
    json config;
    std::string dataset_sha256;
    std::vector<std::string> artifacts;
    std::uint64_t seed = 0;
    double wall_clock_seconds = 0.0;
};
void write_run_manifest(const std::string& dir, const RunManifest& manifest);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace ndno::io
