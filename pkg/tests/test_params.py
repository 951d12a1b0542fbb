import math

import numpy as np
import pytest

from wqed.errors import InvalidParameterError
from wqed.numerics import QuadratureSpec, integrate_1d
from wqed.params import (CONFIG_KEYS, AtomKind, SystemParams, Wavepacket,
                         build_params, load_config, make_paper_defaults,
                         parse_kind)


class TestParseKind:
    @pytest.mark.parametrize("text,expected", [
        ("lambda", AtomKind.LAMBDA3LS),
        ("LAMBDA", AtomKind.LAMBDA3LS),
        ("3ls", AtomKind.LAMBDA3LS),
        ("l", AtomKind.LAMBDA3LS),
        ("n", AtomKind.N4LS),
        (" N4LS ", AtomKind.N4LS),
        ("4ls", AtomKind.N4LS),
    ])
    def test_aliases(self, text, expected):
        assert parse_kind(text) is expected

    def test_enum_passthrough(self):
        assert parse_kind(AtomKind.N4LS) is AtomKind.N4LS

    def test_unknown_raises(self):
        with pytest.raises(InvalidParameterError):
            parse_kind("xi-system")


class TestBuildParams:
    def test_wiring(self):
        p = build_params(AtomKind.N4LS, purcell=9.0, omega_rabi=1.6,
                         gamma2=2.0, delta_ctrl=0.5, omega43=0.25)
        assert p.gamma_wg == 18.0
        assert p.purcell == 9.0
        assert p.eps2 == 0.0
        assert p.eps3 == -0.5
        assert p.eps4 == -0.25

    def test_kind_string_accepted(self):
        p = build_params("n", purcell=1.0, omega_rabi=0.0)
        assert p.kind is AtomKind.N4LS

    def test_negative_purcell_rejected(self):
        with pytest.raises(InvalidParameterError):
            build_params(purcell=-1.0, omega_rabi=1.0)

    @pytest.mark.parametrize("field,value", [
        ("gamma3", -0.1), ("gamma4", -0.1), ("omega_rabi", -0.1),
    ])
    def test_negative_rates_rejected(self, field, value):
        kwargs = dict(purcell=1.0, omega_rabi=1.0)
        kwargs[field] = value
        with pytest.raises(InvalidParameterError):
            build_params(**kwargs)

    def test_gamma2_must_be_positive(self):
        with pytest.raises(InvalidParameterError):
            build_params(purcell=1.0, omega_rabi=1.0, gamma2=0.0)

    def test_inconsistent_purcell_rejected(self):
        with pytest.raises(InvalidParameterError):
            SystemParams(kind=AtomKind.LAMBDA3LS, gamma2=1.0, gamma3=0.0,
                         gamma4=1.0, gamma_wg=9.0, purcell=8.0,
                         omega_rabi=1.6, delta_ctrl=0.0, eps2=0.0,
                         eps3=0.0, eps4=0.0)

    def test_inconsistent_eps3_rejected(self):
        with pytest.raises(InvalidParameterError):
            SystemParams(kind=AtomKind.LAMBDA3LS, gamma2=1.0, gamma3=0.0,
                         gamma4=1.0, gamma_wg=9.0, purcell=9.0,
                         omega_rabi=1.6, delta_ctrl=0.5, eps2=0.0,
                         eps3=0.0, eps4=0.0)

    def test_frozen(self):
        p = build_params(purcell=1.0, omega_rabi=1.0)
        with pytest.raises(Exception):
            p.gamma2 = 2.0


class TestWavepacket:
    def test_normalization(self):
        wp = Wavepacket(sigma=0.37, omega0=1.2)
        val, _ = integrate_1d(lambda k: wp.amplitude(k) ** 2,
                              wp.omega0 - 10 * wp.sigma,
                              wp.omega0 + 10 * wp.sigma,
                              QuadratureSpec(abs_tol=1e-13, rel_tol=1e-12))
        assert math.isclose(val.real, 1.0, rel_tol=1e-10)

    def test_peak_value(self):
        wp = Wavepacket(sigma=0.2, omega0=0.5)
        expected = (2.0 * np.pi * 0.04) ** (-0.25)
        assert math.isclose(float(wp.amplitude(0.5)), expected,
                            rel_tol=1e-14)

    def test_vectorized(self):
        wp = Wavepacket(sigma=0.1, omega0=0.0)
        out = wp.amplitude(np.linspace(-1, 1, 7))
        assert out.shape == (7,)

    def test_sigma_positive(self):
        with pytest.raises(InvalidParameterError):
            Wavepacket(sigma=0.0, omega0=0.0)


class TestPaperDefaults:
    def test_center_is_detuning(self):
        params, wp = make_paper_defaults(purcell=9.0, omega_rabi=1.6,
                                         sigma=0.2, delta_omega=0.7)
        assert wp.omega0 == params.eps2 + 0.7
        assert params.gamma2 == 1.0
        assert params.gamma3 == 0.0
        assert params.gamma4 == 1.0

    def test_bad_sigma(self):
        with pytest.raises(InvalidParameterError):
            make_paper_defaults(purcell=9.0, omega_rabi=1.6, sigma=0.0,
                                delta_omega=0.0)


class TestLoadConfig:
    def test_roundtrip(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment\n"
                       "kind = n\n"
                       "purcell = 9\n"
                       "sigma = 0.2  # trailing comment\n"
                       "\n"
                       "delta_omega = -0.5\n")
        values = load_config(cfg)
        assert values == {"kind": AtomKind.N4LS, "purcell": 9.0,
                          "sigma": 0.2, "delta_omega": -0.5}

    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("sgma = 0.2\n")
        with pytest.raises(InvalidParameterError, match="unknown config key"):
            load_config(cfg)

    def test_bad_number(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("sigma = wide\n")
        with pytest.raises(InvalidParameterError, match="must be a number"):
            load_config(cfg)

    def test_missing_equals(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("sigma 0.2\n")
        with pytest.raises(InvalidParameterError, match="key = value"):
            load_config(cfg)

    def test_config_keys_cover_physical_inputs(self):
        assert set(CONFIG_KEYS) >= {"kind", "purcell", "omega_rabi",
                                    "sigma", "delta_omega"}
