/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/core/config.hpp
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

#include <filesystem>
#include <istream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

namespace facelearn {

/// Malformed config text, a bad value or an unknown key.
struct ConfigError : std::invalid_argument
{
    using std::invalid_argument::invalid_argument;
};

/**
 * Plain-text `key = value` configuration. '#' starts a comment; a key may
 * appear once. Consumers read keys with the typed getters; any key that was never
 * read is reported by `reject_unknown()`, so a typo is an error rather than a
 * silently ignored setting.
 */
class KeyValueConfig
{
public:
    static KeyValueConfig parse(std::istream& in, const std::string& source = "<config>");
    static KeyValueConfig load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const { return values_.count(key) > 0; }

    double get(const std::string& key, double fallback) const;
    int get(const std::string& key, int fallback) const;
    bool get(const std::string& key, bool fallback) const;
    std::string get(const std::string& key, const std::string& fallback) const;

    /// Throws std::invalid_argument naming the first key no getter asked for.
    void reject_unknown() const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    const std::string* lookup(const std::string& key) const;

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> consumed_;
};

} // namespace facelearn
