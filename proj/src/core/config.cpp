/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: src/core/config.cpp
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
#include "facelearn/core/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <stdexcept>

namespace facelearn {

namespace {

std::string trim(const std::string& s)
{
    const auto first = std::find_if_not(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
    const auto last = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) { return std::isspace(c); }).base();
    return first < last ? std::string(first, last) : std::string();
}

} // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in, const std::string& source)
{
    KeyValueConfig config;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line))
    {
        ++line_number;
        const std::string content = trim(line.substr(0, line.find('#')));
        if (content.empty())
            continue;
        const auto eq = content.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(line_number) + ": expected 'key = value'");
        const std::string key = trim(content.substr(0, eq));
        if (key.empty())
            throw ConfigError(source + ":" + std::to_string(line_number) + ": empty key");
        if (!config.values_.emplace(key, trim(content.substr(eq + 1))).second)
            throw ConfigError(source + ":" + std::to_string(line_number) + ": duplicate key '" + key + "'");
    }
    return config;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file: " + path.string());
    return parse(in, path.string());
}

void KeyValueConfig::set(const std::string& key, const std::string& value)
{
    values_[key] = value;
}

const std::string* KeyValueConfig::lookup(const std::string& key) const
{
    consumed_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
}

double KeyValueConfig::get(const std::string& key, double fallback) const
{
    const std::string* v = lookup(key);
    if (!v)
        return fallback;
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size())
        throw ConfigError("config key '" + key + "': not a number: " + *v);
    return out;
}

int KeyValueConfig::get(const std::string& key, int fallback) const
{
    const std::string* v = lookup(key);
    if (!v)
        return fallback;
    int out = 0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size())
        throw ConfigError("config key '" + key + "': not an integer: " + *v);
    return out;
}

bool KeyValueConfig::get(const std::string& key, bool fallback) const
{
    const std::string* v = lookup(key);
    if (!v)
        return fallback;
    if (*v == "true" || *v == "1" || *v == "yes")
        return true;
    if (*v == "false" || *v == "0" || *v == "no")
        return false;
    throw ConfigError("config key '" + key + "': not a boolean: " + *v);
}

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const
{
    const std::string* v = lookup(key);
    return v ? *v : fallback;
}

void KeyValueConfig::reject_unknown() const
{
    for (const auto& [key, _] : values_)
        if (!consumed_.count(key))
            throw ConfigError("unknown config key '" + key + "'");
}

} // namespace facelearn
