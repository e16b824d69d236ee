#!/usr/bin/env python3
"""Regenerates the committed test fixtures under tests/fixtures/.

Every artifact is derived from fixed seeds so reruns are byte-stable.
The natural-photo corpus is exported from scikit-image's bundled sample
images; everything else is synthesized with numpy.

Usage: python3 scripts/make_fixtures.py [--root REPO_ROOT]
"""

import argparse
import json
import math
import os
import struct
import wave

import numpy as np
from PIL import Image


# ---------------------------------------------------------------------------
# helpers


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)


def write_wav_pcm16(path, samples, rate=48000):
    clipped = np.clip(samples, -1.0, 1.0)
    pcm = np.round(clipped * 32767.0).astype("<i2")
    with wave.open(path, "wb") as f:
        f.setnchannels(1)
        f.setsampwidth(2)
        f.setframerate(rate)
        f.writeframes(pcm.tobytes())


def write_png(path, array):
    Image.fromarray(array).save(path, format="PNG")


def write_text(path, text):
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record, ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# audio


def make_audio(out_dir):
    ensure_dir(out_dir)
    rate = 48000
    t = np.arange(int(rate * 2.0)) / rate
    sine = 0.6 * np.sin(2.0 * math.pi * 440.0 * t)

    # Noise 10 dB below the sine power: sigma^2 = 0.5 * 0.6^2 / 10.
    rng = np.random.RandomState(7)
    sigma = math.sqrt(0.5 * 0.6 * 0.6 / 10.0)
    noisy = sine + rng.normal(0.0, sigma, sine.shape)

    rng = np.random.RandomState(11)
    noise = rng.normal(0.0, 0.25, sine.shape)

    clipped = np.clip(1.7 * np.sin(2.0 * math.pi * 440.0 * t), -0.999, 0.999)

    gapped = sine.copy()
    gap = int(rate * 0.12)
    for start_s in (0.4, 0.9, 1.5):
        start = int(rate * start_s)
        gapped[start:start + gap] = 0.0

    write_wav_pcm16(os.path.join(out_dir, "sine_clean.wav"), sine, rate)
    write_wav_pcm16(os.path.join(out_dir, "sine_noise.wav"), noisy, rate)
    write_wav_pcm16(os.path.join(out_dir, "noise.wav"), noise, rate)
    write_wav_pcm16(os.path.join(out_dir, "sine_clipped.wav"), clipped, rate)
    write_wav_pcm16(os.path.join(out_dir, "sine_gapped.wav"), gapped, rate)


# ---------------------------------------------------------------------------
# images

CORPUS_PHOTOS = [
    "astronaut", "brick", "cat", "chelsea", "clock", "coffee", "coins",
    "grass", "gravel", "hubble_deep_field", "immunohistochemistry", "moon",
    "rocket",
]


def make_images(out_dir):
    import skimage.data

    corpus_dir = os.path.join(out_dir, "corpus")
    ensure_dir(corpus_dir)
    for name in CORPUS_PHOTOS:
        img = getattr(skimage.data, name)()
        write_png(os.path.join(corpus_dir, name + ".png"), img)

    photo = skimage.data.camera()
    write_png(os.path.join(out_dir, "photo.png"), photo)

    rng = np.random.RandomState(3)
    noisy = photo.copy()
    mask = rng.rand(*noisy.shape)
    noisy[mask < 0.015] = 0
    noisy[mask > 0.985] = 255
    write_png(os.path.join(out_dir, "photo_noisy.png"), noisy)


def texture_image(seed, size=224):
    """Deterministic synthetic photo-ish texture for golden assets."""
    rng = np.random.RandomState(seed)
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    img = 96.0 + 64.0 * np.sin(x / (9.0 + seed % 5)) * np.cos(y / (13.0 + seed % 7))
    img += 32.0 * np.sin((x + y) / 21.0)
    img += rng.normal(0.0, 6.0, img.shape)
    # Mild blur so the local statistics are not dominated by the noise floor.
    img = (img + np.roll(img, 1, 0) + np.roll(img, 1, 1) + np.roll(img, -1, 0)) / 4.0
    return np.clip(img, 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# meshes


def subdivided_cube(divisions=4):
    """Welded triangle mesh of the unit cube with outward winding."""
    faces_spec = [
        ((0, 0, 0), (0, 1, 0), (1, 0, 0)),  # -Z
        ((0, 0, 1), (1, 0, 0), (0, 1, 0)),  # +Z
        ((0, 0, 0), (1, 0, 0), (0, 0, 1)),  # -Y
        ((0, 1, 0), (0, 0, 1), (1, 0, 0)),  # +Y
        ((0, 0, 0), (0, 0, 1), (0, 1, 0)),  # -X
        ((1, 0, 0), (0, 1, 0), (0, 0, 1)),  # +X
    ]
    verts = []
    index = {}
    tris = []

    def vid(p):
        key = (round(p[0], 9), round(p[1], 9), round(p[2], 9))
        if key not in index:
            index[key] = len(verts)
            verts.append(key)
        return index[key]

    n = divisions
    for origin, u, v in faces_spec:
        grid = [[None] * (n + 1) for _ in range(n + 1)]
        for i in range(n + 1):
            for j in range(n + 1):
                p = tuple(origin[k] + u[k] * i / n + v[k] * j / n for k in range(3))
                grid[i][j] = vid(p)
        for i in range(n):
            for j in range(n):
                a, b = grid[i][j], grid[i + 1][j]
                c, d = grid[i + 1][j + 1], grid[i][j + 1]
                tris.append((a, b, c))
                tris.append((a, c, d))
    return verts, tris


def write_off(path, verts, tris):
    lines = ["OFF", f"{len(verts)} {len(tris)} 0"]
    lines += [f"{v[0]} {v[1]} {v[2]}" for v in verts]
    lines += [f"3 {t[0]} {t[1]} {t[2]}" for t in tris]
    write_text(path, "\n".join(lines) + "\n")


def write_obj(path, verts, tris):
    lines = [f"v {v[0]} {v[1]} {v[2]}" for v in verts]
    lines += [f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}" for t in tris]
    write_text(path, "\n".join(lines) + "\n")


def write_ply_points(path, points):
    lines = [
        "ply", "format ascii 1.0",
        f"element vertex {len(points)}",
        "property float x", "property float y", "property float z",
        "end_header",
    ]
    lines += [f"{p[0]:.6f} {p[1]:.6f} {p[2]:.6f}" for p in points]
    write_text(path, "\n".join(lines) + "\n")


def fibonacci_sphere(n):
    golden = math.pi * (3.0 - math.sqrt(5.0))
    pts = []
    for i in range(n):
        z = 1.0 - 2.0 * (i + 0.5) / n
        r = math.sqrt(max(0.0, 1.0 - z * z))
        phi = golden * i
        pts.append((r * math.cos(phi), r * math.sin(phi), z))
    return pts


def make_meshes(out_dir):
    ensure_dir(out_dir)
    verts, tris = subdivided_cube(4)
    write_off(os.path.join(out_dir, "cube_subdiv.off"), verts, tris)
    write_obj(os.path.join(out_dir, "cube_subdiv.obj"), verts, tris)

    # Drop the +Z face triangles: leaves a boundary ring around the opening.
    top = [t for t in tris if not all(verts[i][2] == 1 for i in t)]
    write_off(os.path.join(out_dir, "cube_open.off"), verts, top)

    tetra_v = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]
    tetra_f = [(0, 2, 1), (0, 1, 3), (0, 3, 2), (1, 2, 3)]
    write_obj(os.path.join(out_dir, "tetra.obj"), tetra_v, tetra_f)

    pts = fibonacci_sphere(4096)
    write_ply_points(os.path.join(out_dir, "sphere_cloud.ply"), pts)

    rng = np.random.RandomState(19)
    clustered = list(pts)
    for i in range(len(clustered) - 410, len(clustered)):
        off = rng.normal(0.0, 0.05, 3)
        clustered[i] = (5.0 + off[0], 5.0 + off[1], 5.0 + off[2])
    write_ply_points(os.path.join(out_dir, "sphere_clustered.ply"), clustered)


# ---------------------------------------------------------------------------
# golden end-to-end dataset


def make_golden(out_dir):
    assets = os.path.join(out_dir, "assets")
    ensure_dir(assets)
    rate = 48000

    def tone(freq, seconds, amp=0.5, seed=None):
        t = np.arange(int(rate * seconds)) / rate
        wavef = amp * np.sin(2.0 * math.pi * freq * t)
        if seed is not None:
            wavef += np.random.RandomState(seed).normal(0.0, 0.02, wavef.shape)
        return wavef

    write_png(os.path.join(assets, "g02_input.png"), texture_image(21))
    write_png(os.path.join(assets, "g02_gt.png"), texture_image(22))
    write_png(os.path.join(assets, "g02_resp.png"), texture_image(23))
    write_png(os.path.join(assets, "g08_gt1.png"), texture_image(24))
    write_png(os.path.join(assets, "g08_gt2.png"), texture_image(25))
    write_png(os.path.join(assets, "g08_resp1.png"), texture_image(26))
    write_png(os.path.join(assets, "g10_gt.png"), texture_image(27))

    write_wav_pcm16(os.path.join(assets, "g03_call.wav"), tone(880, 0.5), rate)
    write_wav_pcm16(os.path.join(assets, "g03_gt.wav"), tone(660, 0.5), rate)
    write_wav_pcm16(os.path.join(assets, "g03_resp.wav"),
                    tone(662, 0.5, seed=31), rate)
    write_wav_pcm16(os.path.join(assets, "g08_resp.wav"), tone(330, 0.5), rate)

    write_text(os.path.join(assets, "g04_table.csv"),
               "quarter,revenue,costs\nQ1,10.0,4.0\nQ2,11.2,4.0\n")

    write_text(os.path.join(assets, "g05_gt.md"),
               "```python\n"
               "def is_leap(year):\n"
               "    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)\n"
               "```\n")
    write_text(os.path.join(assets, "g05_resp.md"),
               "```python\n"
               "def is_leap(year):\n"
               "    if year % 400 == 0:\n"
               "        return True\n"
               "    if year % 100 == 0:\n"
               "        return False\n"
               "    return year % 4 == 0\n"
               "```\n")

    verts, tris = subdivided_cube(4)
    write_off(os.path.join(assets, "g06_gt.off"), verts, tris)
    top = [t for t in tris if not all(verts[i][2] == 1 for i in t)]
    write_off(os.path.join(assets, "g06_resp.off"), verts, top)

    # Placeholder container bytes: the pipeline never decodes video streams.
    with open(os.path.join(assets, "g07_clip.mp4"), "wb") as f:
        f.write(struct.pack(">I", 24) + b"ftypmp42" + b"\x00" * 8 + b"mp42isom")
        f.write(b"\x00" * 64)

    instances = [
        {
            "id": "g01", "field": "natural_science", "domain": "math",
            "capabilities": ["C1"],
            "question": "What is the sum of 17 and 25?",
            "ground_truth": "The sum of 17 and 25 is 42.",
        },
        {
            "id": "g02", "field": "natural_science", "domain": "physics",
            "capabilities": ["C2", "C4"], "task_type": "image editing",
            "question": "Describe the forces acting on the block shown in <image1>.",
            "ground_truth": "The block experiences gravity and friction. <image1>",
            "input_assets": {"image1": "assets/g02_input.png"},
            "gt_assets": {"image1": "assets/g02_gt.png"},
        },
        {
            "id": "g03", "field": "natural_science", "domain": "biology",
            "capabilities": ["C3"],
            "question": "Listen to <audio1> and identify the call.",
            "ground_truth": "The recording is a songbird call. <audio1>",
            "input_assets": {"audio1": "assets/g03_call.wav"},
            "gt_assets": {"audio1": "assets/g03_gt.wav"},
        },
        {
            "id": "g04", "field": "social_science", "domain": "finance",
            "capabilities": ["C5"], "difficulty": "easy",
            "question": "Summarize the quarterly figures in <document1>.",
            "ground_truth": "Revenue grew 12 percent while costs stayed flat.",
            "input_assets": {"document1": "assets/g04_table.csv"},
        },
        {
            "id": "g05", "field": "social_science", "domain": "law",
            "capabilities": ["C6"], "difficulty": "hard",
            "question": "Write a function that checks whether a year is a leap year.",
            "ground_truth": "<code1>",
            "gt_assets": {"code1": "assets/g05_gt.md"},
        },
        {
            "id": "g06", "field": "social_science", "domain": "art",
            "capabilities": ["C7", "C8"], "reasoning_level": 3,
            "question": "Model a simple cube sculpture as a mesh.",
            "ground_truth": "<3d1>",
            "gt_assets": {"3d1": "assets/g06_gt.off"},
        },
        {
            "id": "g07", "field": "general_area", "domain": "sports",
            "capabilities": ["C9"],
            "question": "Who scores in <video1>?",
            "ground_truth": "The striker scores a header.",
            "input_assets": {"video1": "assets/g07_clip.mp4"},
        },
        {
            "id": "g08", "field": "general_area", "domain": "news",
            "capabilities": ["C1", "C10"], "task_type": "image generation",
            "reasoning_level": 2,
            "question": "Produce a two-panel illustrated news brief about the storm.",
            "ground_truth": "Storm makes landfall. <image1> Cleanup begins. <image2>",
            "gt_assets": {"image1": "assets/g08_gt1.png",
                          "image2": "assets/g08_gt2.png"},
        },
        {
            "id": "g09", "field": "general_area", "domain": "food",
            "capabilities": ["C2"],
            "question": "Give one sentence describing a balanced breakfast.",
            "ground_truth": "A balanced breakfast pairs protein with whole grains and fruit.",
        },
        {
            "id": "g10", "field": "general_area", "domain": "health",
            "capabilities": ["C3", "C5"],
            "question": "Sketch a simple walking plan with a diagram.",
            "ground_truth": "Walk 30 minutes daily. <image1>",
            "gt_assets": {"image1": "assets/g10_gt.png"},
        },
    ]

    responses = [
        {"instance_id": "g01",
         "output": "The sum of 17 and 25 is 42."},
        {"instance_id": "g02",
         "output": "Gravity pulls the block downward while friction resists sliding. <image1>",
         "output_assets": {"image1": "assets/g02_resp.png"}},
        {"instance_id": "g03",
         "output": "It sounds like a songbird. <audio1>",
         "output_assets": {"audio1": "assets/g03_resp.wav"}},
        {"instance_id": "g04",
         "output": "Revenue rose about 12 percent and costs were unchanged."},
        {"instance_id": "g05",
         "output": "<code1>",
         "output_assets": {"code1": "assets/g05_resp.md"}},
        {"instance_id": "g06",
         "output": "Here is the sculpture mesh. <3d1>",
         "output_assets": {"3d1": "assets/g06_resp.off"}},
        {"instance_id": "g07",
         "output": "A header from the striker."},
        {"instance_id": "g08",
         "output": "Storm hits the coast. <image1> <audio1>",
         "output_assets": {"image1": "assets/g08_resp1.png",
                           "audio1": "assets/g08_resp.wav"}},
        {"instance_id": "g09",
         "output": ""},
        {"instance_id": "g10",
         "output": "Here is a plan. <image1>",
         "output_assets": {"image1": "assets/g10_missing.png"}},
    ]

    write_jsonl(os.path.join(out_dir, "instances.jsonl"), instances)
    write_jsonl(os.path.join(out_dir, "responses.jsonl"), responses)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", default=os.path.dirname(os.path.dirname(
        os.path.abspath(__file__))))
    args = parser.parse_args()

    fixtures = os.path.join(args.root, "tests", "fixtures")
    make_audio(os.path.join(fixtures, "audio"))
    make_images(os.path.join(fixtures, "images"))
    make_meshes(os.path.join(fixtures, "meshes"))
    make_golden(os.path.join(fixtures, "golden"))
    print("fixtures written under", fixtures)


if __name__ == "__main__":
    main()
