#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "guided/models.hpp"
#include "guided/tensor.hpp"

namespace guided {

/// On-disk model format: 8-byte magic, u64 little-endian manifest length,
/// JSON manifest, then one raw little-endian float64 blob. The manifest
/// carries the architecture, freeze flags and per-tensor byte offsets into
/// the blob.

struct Checkpoint {
    nlohmann::json manifest;
    std::map<std::string, Tensor> tensors;
};

void write_checkpoint(const std::string& path, nlohmann::json manifest,
                      const std::vector<std::pair<std::string, const Tensor*>>& tensors);

/// Missing file -> ArtifactError; unreadable -> IoError; corrupt -> ArtifactError.
Checkpoint read_checkpoint(const std::string& path);

void save_mlp(const std::string& path, Mlp& net, nlohmann::json meta = nlohmann::json::object());
Mlp load_mlp(const std::string& path);

void save_classifier(const std::string& path, Classifier& c,
                     nlohmann::json meta = nlohmann::json::object());
Classifier load_classifier(const std::string& path);

void save_guidance(const std::string& path, GuidanceNet& g,
                   nlohmann::json meta = nlohmann::json::object());
GuidanceNet load_guidance(const std::string& path);

/// Meta object stored alongside the architecture (empty if absent).
nlohmann::json checkpoint_meta(const std::string& path);

} // namespace guided
