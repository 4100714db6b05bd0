/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/autodiff/tape.hpp
 *
 * Copyright 2026 The facelearn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace facelearn {
namespace autodiff {

/**
 * Reverse-mode tape over a fixed pipeline. Each forward stage records one
 * closure that reads the adjoints of its outputs and accumulates into the
 * adjoints of its inputs; backward() runs them newest first.
 */
class GradientTape
{
public:
    void record(std::string stage, std::function<void()> backward)
    {
        stages_.push_back({std::move(stage), std::move(backward)});
    }

    /// Replays every stage in reverse order, then clears the tape.
    void backward()
    {
        for (auto it = stages_.rbegin(); it != stages_.rend(); ++it)
            it->second();
        stages_.clear();
    }

    void clear() { stages_.clear(); }
    std::size_t size() const { return stages_.size(); }
    bool empty() const { return stages_.empty(); }

    std::vector<std::string> stage_names() const
    {
        std::vector<std::string> out;
        for (const auto& s : stages_)
            out.push_back(s.first);
        return out;
    }

private:
    std::vector<std::pair<std::string, std::function<void()>>> stages_;
};

} // namespace autodiff
} // namespace facelearn
