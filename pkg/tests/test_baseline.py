import random

import numpy as np
import pytest

from oracles import naive_dct2, naive_idct2
from scenecodec.baseline import (
    BASE_QUANT_MATRIX,
    DEFAULT_QUALITIES,
    QuantizerConfig,
    ZIGZAG,
    calibration_images,
    dct8x8_forward,
    dct8x8_inverse,
    decode_image,
    default_token_codebook,
    encode_image,
    train_token_codebook,
)
from scenecodec.core import Bitstream, Codec, Image, deserialize_bitstream, serialize_bitstream
from scenecodec.errors import FormatError
from scenecodec.metrics import mse, psnr


class TestDct:
    def test_constant_block(self):
        coeffs = dct8x8_forward(np.full((8, 8), 128.0))
        assert coeffs[0, 0] == pytest.approx(1024.0, abs=1e-9)
        coeffs[0, 0] = 0.0
        assert np.abs(coeffs).max() < 1e-9

    def test_zero_block(self):
        assert np.abs(dct8x8_forward(np.zeros((8, 8)))).max() == 0.0

    def test_matches_direct_summation(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            block = rng.uniform(-255, 255, (8, 8))
            expected = np.array(naive_dct2(block.tolist()))
            assert np.abs(dct8x8_forward(block) - expected).max() < 1e-9
            coeffs = rng.uniform(-500, 500, (8, 8))
            expected_inv = np.array(naive_idct2(coeffs.tolist()))
            assert np.abs(dct8x8_inverse(coeffs) - expected_inv).max() < 1e-9

    def test_inverse_of_forward(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            block = rng.uniform(0, 255, (8, 8))
            assert np.abs(dct8x8_inverse(dct8x8_forward(block)) - block).max() < 1e-9

    def test_parseval(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            block = rng.uniform(-300, 300, (8, 8))
            energy = float(np.sum(block * block))
            coeff_energy = float(np.sum(dct8x8_forward(block) ** 2))
            assert abs(energy - coeff_energy) / energy < 1e-6

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            dct8x8_forward(np.zeros((4, 4)))


class TestQuantizer:
    def test_quality_bounds(self):
        with pytest.raises(ValueError):
            QuantizerConfig(0)
        with pytest.raises(ValueError):
            QuantizerConfig(101)

    def test_quality_100_all_ones(self):
        assert (QuantizerConfig(100).effective == 1).all()

    def test_quality_50_is_base_table(self):
        assert (QuantizerConfig(50).effective == BASE_QUANT_MATRIX).all()

    def test_low_quality_scales_up(self):
        q10 = QuantizerConfig(10).effective
        assert (q10 >= QuantizerConfig(50).effective).all()
        assert q10.max() <= 255
        assert q10.min() >= 1

    def test_round_half_away_from_zero(self):
        # 61 * 0.5 = 30.5 must round to 31, not to even 30
        assert QuantizerConfig(75).effective[0, 7] == 31


class TestZigzag:
    def test_is_permutation(self):
        assert sorted(ZIGZAG.tolist()) == list(range(64))

    def test_standard_prefix(self):
        # first diagonal walks of the conventional order
        assert ZIGZAG[:10].tolist() == [0, 1, 8, 16, 9, 2, 3, 10, 17, 24]


class TestCodecRoundTrip:
    def test_constant_image_quality_100_exact(self):
        img = Image.filled(64, 64, (128, 40, 220))
        stream = encode_image(img, QuantizerConfig(100))
        recon = decode_image(stream)
        assert recon == img
        assert psnr(img, recon) == float("inf")

    def test_blockwise_constant_quality_100_exact(self):
        rng = np.random.default_rng(3)
        tiles = rng.integers(0, 256, (4, 4, 3), dtype=np.uint8)
        arr = np.repeat(np.repeat(tiles, 8, axis=0), 8, axis=1)
        img = Image.from_array(arr)
        stream = encode_image(img, QuantizerConfig(100))
        assert decode_image(stream) == img

    def test_shape_contract_and_range(self):
        img = calibration_images()[0]
        for q in (10, 55, 90):
            recon = decode_image(encode_image(img, QuantizerConfig(q)))
            assert (recon.width, recon.height) == (img.width, img.height)
            assert recon.pixels.min() >= 0 and recon.pixels.max() <= 255

    def test_padding_crop(self):
        rng = np.random.default_rng(4)
        img = Image.from_array(rng.integers(0, 256, (29, 37, 3), dtype=np.uint8))
        recon = decode_image(encode_image(img, QuantizerConfig(80)))
        assert (recon.width, recon.height) == (37, 29)

    def test_wire_round_trip(self):
        img = calibration_images()[1]
        stream = encode_image(img, QuantizerConfig(40))
        wire = serialize_bitstream(stream)
        assert decode_image(deserialize_bitstream(wire)) == decode_image(stream)

    def test_quality_config_mismatch(self):
        img = Image.filled(64, 64, (10, 20, 30))
        stream = encode_image(img, QuantizerConfig(30))
        with pytest.raises(FormatError):
            decode_image(stream, QuantizerConfig(40))

    def test_codec_id_checked(self):
        from scenecodec.entropy import train_codebook, encode_text

        text_stream = encode_text(b"hi", train_codebook([b"hi"]))
        with pytest.raises(FormatError):
            decode_image(text_stream)


class TestMonotonicity:
    def test_rate_and_distortion_monotone_on_calibration_corpus(self):
        images = calibration_images()
        cb = default_token_codebook()
        rates, errors = [], []
        for q in DEFAULT_QUALITIES:
            cfg = QuantizerConfig(q)
            q_rates, q_mse = [], []
            for img in images:
                stream = encode_image(img, cfg, cb)
                q_rates.append(len(serialize_bitstream(stream)))
                q_mse.append(mse(img, decode_image(stream, cfg, cb)))
            rates.append(float(np.mean(q_rates)))
            errors.append(float(np.mean(q_mse)))
        assert all(b > a for a, b in zip(rates, rates[1:])), rates
        assert all(b < a for a, b in zip(errors, errors[1:])), errors

    def test_single_image_rate_ordering(self):
        img = calibration_images()[2]
        low = len(encode_image(img, QuantizerConfig(10)).payload)
        high = len(encode_image(img, QuantizerConfig(90)).payload)
        assert low < high


class TestTokenStreamErrors:
    def test_truncated_stream(self):
        img = calibration_images()[0]
        stream = encode_image(img, QuantizerConfig(50))
        bits = stream.payload_bit_length // 3
        payload = bytearray(stream.payload[: (bits + 7) // 8])
        if bits % 8:
            payload[-1] &= (0xFF << (8 - bits % 8)) & 0xFF
        cut = Bitstream(Codec.BASELINE_DCT, stream.codebook_id, bits, bytes(payload))
        with pytest.raises(FormatError):
            decode_image(cut)

    def test_garbled_stream(self):
        rng = random.Random(5)
        img = calibration_images()[0]
        stream = encode_image(img, QuantizerConfig(50))
        payload = bytearray(stream.payload)
        for _ in range(25):
            payload[rng.randrange(16, len(payload))] ^= rng.randrange(1, 256)
        garbled = Bitstream(
            Codec.BASELINE_DCT, stream.codebook_id, stream.payload_bit_length, bytes(payload)
        )
        try:
            recon = decode_image(garbled)
            assert (recon.width, recon.height) == (img.width, img.height)
        except FormatError:
            pass  # either outcome is structured

    def test_implausible_dimensions(self):
        writer_payload = bytes([50]) + (2**24).to_bytes(4, "little") + (2**24).to_bytes(4, "little")
        stream = Bitstream(Codec.BASELINE_DCT, 0, 8 * len(writer_payload), writer_payload)
        with pytest.raises(FormatError):
            decode_image(stream)


class TestTokenCodebookFixture:
    def test_shipped_fixture_matches_retraining(self):
        assert default_token_codebook() == train_token_codebook(calibration_images())

    def test_calibration_images_fixed(self):
        images = calibration_images()
        assert len(images) == 10
        assert all((img.width, img.height) == (128, 128) for img in images)
        again = calibration_images()
        assert all(a == b for a, b in zip(images, again))
