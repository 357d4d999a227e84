#!/usr/bin/env python3
"""Regenerates include/kalma/prompt_assets.hpp from prompts/*.txt."""
import os

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
PROMPTS = os.path.join(ROOT, "prompts")
OUT = os.path.join(ROOT, "include", "kalma", "prompt_assets.hpp")


def main():
    names = sorted(n for n in os.listdir(PROMPTS) if n.endswith(".txt"))
    lines = [
        "#pragma once",
        "",
        "// Built-in copies of the files under prompts/. prompts_test checks that the two",
        "// stay byte-identical.",
        "",
        "#include <array>",
        "#include <string_view>",
        "",
        "namespace kalma::prompt_assets {",
        "",
        "struct Asset {",
        "  std::string_view name;",
        "  std::string_view text;",
        "};",
        "",
        f"inline constexpr std::array<Asset, {len(names)}> kAll = {{{{",
    ]
    for n in names:
        with open(os.path.join(PROMPTS, n), encoding="utf-8") as f:
            body = f.read()
        if ')PROMPT"' in body:
            raise SystemExit(f"{n}: contains the raw-string delimiter")
        lines.append(f'    {{"{n[:-4]}", R"PROMPT({body})PROMPT"}},')
    lines += ["}};", "", "}  // namespace kalma::prompt_assets"]
    with open(OUT, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
