"""Config parsing, validation messages, and file round trips."""

import json

import pytest

from panosphere.config import (
    DEFAULT_PROMPTS,
    RING_LAYOUT,
    ForegroundView,
    PipelineConfig,
    PromptSet,
    config_from_dict,
    config_to_dict,
    load_config,
    save_config,
    with_overrides,
)


class TestDefaults:
    def test_ring_layout(self):
        assert RING_LAYOUT == (
            (-90.0, 4), (-77.5, 8), (-45.0, 11), (-22.5, 14), (0.0, 15),
            (22.5, 14), (45.0, 11), (77.5, 8), (90.0, 4),
        )
        assert sum(count for _, count in RING_LAYOUT) == 89

    def test_default_config(self):
        cfg = PipelineConfig()
        assert cfg.lattice_size == 2600
        assert cfg.channels == 4
        assert cfg.total_steps == 10
        assert cfg.fov_deg == 80.0
        assert cfg.tau == 0.5
        assert cfg.erp_height == 1024
        assert cfg.rings == RING_LAYOUT

    def test_default_prompts_cover_slots(self):
        prompts = PromptSet()
        for slot in ("top", "upper", "middle", "lower", "bottom"):
            assert prompts.resolve(slot) == DEFAULT_PROMPTS[slot]


class TestValidation:
    @pytest.mark.parametrize(
        "kwargs,key",
        [
            (dict(total_steps=0), "steps"),
            (dict(lattice_size=3), "n"),
            (dict(channels=0), "channels"),
            (dict(fov_deg=0.0), "fov_deg"),
            (dict(fov_deg=180.0), "fov_deg"),
            (dict(tau=0.0), "tau"),
            (dict(rings=()), "rings"),
            (dict(rings=((100.0, 4),)), "rings"),
            (dict(rings=((0.0, 0),)), "rings"),
            (dict(erp_height=0), "erp_height"),
        ],
    )
    def test_errors_name_the_key(self, kwargs, key):
        with pytest.raises(ValueError, match=key):
            PipelineConfig(**kwargs)


class TestDictCodec:
    def test_round_trip(self):
        cfg = PipelineConfig(
            lattice_size=500,
            total_steps=3,
            seed=42,
            foreground=(ForegroundView(10.0, -5.0, "a statue", b=-2.0),),
        )
        prompts = PromptSet(middle="plaza", foreground=("a statue",))
        back_cfg, back_prompts = config_from_dict(config_to_dict(cfg, prompts))
        assert back_cfg == cfg
        assert back_prompts == prompts

    def test_empty_object_gives_defaults(self):
        cfg, prompts = config_from_dict({})
        assert cfg == PipelineConfig()
        assert prompts == PromptSet()

    def test_partial_keys(self):
        cfg, _ = config_from_dict({"n": 600, "steps": 5})
        assert cfg.lattice_size == 600 and cfg.total_steps == 5
        assert cfg.fov_deg == 80.0

    def test_unknown_key_named(self):
        with pytest.raises(ValueError, match="wobble"):
            config_from_dict({"wobble": 3})

    def test_unknown_prompt_slot_named(self):
        with pytest.raises(ValueError, match="prompts.sideways"):
            config_from_dict({"prompts": {"sideways": "x"}})

    def test_bad_rings_shape(self):
        with pytest.raises(ValueError, match="rings"):
            config_from_dict({"rings": [[0.0]]})
        with pytest.raises(ValueError, match="rings"):
            config_from_dict({"rings": "equator"})

    def test_bad_foreground_entry(self):
        with pytest.raises(ValueError, match="foreground"):
            config_from_dict({"foreground": [{"azimuth_deg": 0.0}]})

    def test_foreground_prompts_threaded_into_prompt_set(self):
        cfg, prompts = config_from_dict(
            {
                "foreground": [
                    {"azimuth_deg": 0.0, "elevation_deg": 0.0, "prompt": "p0"},
                    {"azimuth_deg": 90.0, "elevation_deg": 5.0, "prompt": "p1"},
                ]
            }
        )
        assert prompts.foreground == ("p0", "p1")
        assert prompts.resolve("foreground:1") == "p1"
        assert cfg.foreground[1].b == -3.0


class TestFileIO:
    def test_save_load_round_trip(self, tmp_path):
        path = tmp_path / "config.json"
        cfg = PipelineConfig(lattice_size=700, seed=9)
        prompts = PromptSet(bottom="sand")
        save_config(path, cfg, prompts)
        back_cfg, back_prompts = load_config(path)
        assert back_cfg == cfg and back_prompts == prompts
        # the file itself is ordinary JSON
        assert json.loads(path.read_text())["n"] == 700

    def test_invalid_json_named(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{nope")
        with pytest.raises(ValueError, match="JSON"):
            load_config(path)


class TestOverrides:
    def test_none_values_skipped(self):
        cfg = PipelineConfig()
        same = with_overrides(cfg, lattice_size=None, total_steps=None)
        assert same == cfg
        changed = with_overrides(cfg, lattice_size=900, seed=None)
        assert changed.lattice_size == 900 and changed.seed == cfg.seed

    def test_overrides_still_validated(self):
        with pytest.raises(ValueError):
            with_overrides(PipelineConfig(), total_steps=0)
