#pragma once

// Pinned end-to-end recipes: every seed, size and threshold is fixed here.

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pps {

struct RecipeResult {
    std::string name;
    bool pass = false;
    double seconds = 0.0;
    nlohmann::json summary = nlohmann::json::object();
};

const std::vector<std::string>& recipe_names();

// Runs one recipe, writing its histogram, curve and report under out_dir.
RecipeResult run_recipe(const std::string& name, const std::filesystem::path& out_dir, unsigned threads = 0);

}  // namespace pps
