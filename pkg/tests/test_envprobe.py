import json

import pytest

from decide.envprobe import (
    CONDA,
    NATIVE,
    EnvSnapshot,
    SnapshotLoadError,
    TranscriptRunner,
    detect_environment,
    load_snapshot,
    probe_local_stack,
    save_snapshot,
    snapshot_to_dict,
)
from decide.model import StackLayer, VersionedComponent, parse_version
from decide.recognize import Lexicon

NVIDIA_SMI = (
    "Mon Aug  3 10:00:00 2020\n"
    "+-----------------------------------------------------------------+\n"
    "| NVIDIA-SMI 440.33.01    Driver Version: 440.33.01    CUDA Version: 10.2 |\n"
    "| GPU  Name        Persistence-M| Bus-Id |\n"
    "|   0  GeForce RTX 2080    Off  | 00000000:01:00.0 |\n"
)

NATIVE_TRANSCRIPT = {
    "sh -c echo $CONDA_PREFIX": {"exit": 0, "stdout": "\n"},
    "pip freeze": {
        "exit": 0,
        "stdout": "numpy==1.24.0\nscipy==1.7.3\ntorch==1.13.1+cu117\nweirdpkg===broken\n",
    },
    "python --version": {"exit": 0, "stdout": "Python 3.6.9\n"},
    "nvcc --version": {
        "exit": 0,
        "stdout": "nvcc: NVIDIA (R) Cuda compiler driver\nCuda compilation tools, release 10.2, V10.2.89\n",
    },
    "nvidia-smi": {"exit": 0, "stdout": NVIDIA_SMI},
    "gcc --version": {"exit": 0, "stdout": "gcc (Ubuntu 9.4.0-1ubuntu1~20.04.2) 9.4.0\n"},
    "cat /etc/os-release": {
        "exit": 0,
        "stdout": 'NAME="Ubuntu"\nVERSION="18.04.6 LTS"\nID=ubuntu\nVERSION_ID="18.04"\n',
    },
    "uname -sr": {"exit": 0, "stdout": "Linux 5.4.0-100-generic\n"},
    "uname -a": {"exit": 0, "stdout": "Linux host 5.4.0 x86_64 GNU/Linux\n"},
    "uname -m": {"exit": 0, "stdout": "x86_64\n"},
}

M1_TRANSCRIPT = {
    "sh -c echo $CONDA_PREFIX": {"exit": 0, "stdout": ""},
    "pip freeze": {"exit": 0, "stdout": "scikit-learn==1.0\n"},
    "python --version": {"exit": 0, "stdout": "Python 3.9.7\n"},
    "sw_vers -productVersion": {"exit": 0, "stdout": "11.6.8\n"},
    "uname -a": {
        "exit": 0,
        "stdout": "Darwin mac.local 20.6.0 Darwin Kernel Version 20.6.0 root:xnu/RELEASE_ARM64_T8101 arm64\n",
    },
}

CONDA_TRANSCRIPT = {
    "sh -c echo $CONDA_PREFIX": {"exit": 0, "stdout": "/home/u/miniconda3/envs/dl\n"},
    "conda list": {
        "exit": 0,
        "stdout": (
            "# packages in environment at /home/u/miniconda3/envs/dl:\n"
            "#\n"
            "# Name                    Version                   Build  Channel\n"
            "cudatoolkit               10.2.89              hfd86e86_1\n"
            "cudnn                     7.6.5                cuda10.2_0\n"
            "numpy                     1.19.5           py38h89c1606_1\n"
            "python                    3.8.12               h12debd9_0\n"
            "tensorflow-gpu            2.2.0                h0d30ee6_0\n"
        ),
    },
    "python --version": {"exit": 0, "stdout": "Python 3.8.12\n"},
    "conda --version": {"exit": 0, "stdout": "conda 4.12.0\n"},
    "cat /etc/os-release": {"exit": 0, "stdout": 'ID=ubuntu\nVERSION_ID="20.04"\n'},
    "uname -sr": {"exit": 0, "stdout": "Linux 5.15.0-91-generic\n"},
    "uname -a": {"exit": 0, "stdout": "Linux box 5.15.0 x86_64 GNU/Linux\n"},
    "uname -m": {"exit": 0, "stdout": "x86_64\n"},
}


@pytest.fixture(scope="module")
def lexicon():
    return Lexicon.default()


def by_name(snapshot: EnvSnapshot):
    return {vc.component: vc for vc in snapshot.components}


class TestDetectEnvironment:
    def test_conda_prefix_set(self):
        assert detect_environment(TranscriptRunner(CONDA_TRANSCRIPT)) == CONDA

    def test_empty_output_native(self):
        assert detect_environment(TranscriptRunner(NATIVE_TRANSCRIPT)) == NATIVE

    def test_probe_failure_native(self):
        assert detect_environment(TranscriptRunner({})) == NATIVE


@pytest.fixture(scope="module")
def native_snapshot(lexicon):
    return probe_local_stack(TranscriptRunner(NATIVE_TRANSCRIPT), lexicon)


class TestNativeProbe:
    @pytest.fixture()
    def snapshot(self, native_snapshot):
        return native_snapshot

    def test_freeze_line_parsed(self, snapshot):
        numpy = by_name(snapshot)["numpy"]
        assert numpy.version.text == "1.24.0"
        assert snapshot.layers["numpy"] is StackLayer.LIBRARY

    def test_local_suffix_coerced_and_canonicalized(self, snapshot):
        torch = by_name(snapshot)["pytorch"]
        assert torch.version.text == "1.13.1"

    def test_unparseable_package_omitted(self, snapshot):
        assert "weirdpkg" not in by_name(snapshot)

    def test_cuda_from_nvcc(self, snapshot):
        assert by_name(snapshot)["cuda"].version.text == "10.2"
        assert snapshot.layers["cuda"] is StackLayer.DRIVER

    def test_runtime_python(self, snapshot):
        assert by_name(snapshot)["python"].version.text == "3.6.9"

    def test_os_detected(self, snapshot):
        # "18.04" normalizes to numeric segments (leading zero dropped)
        assert by_name(snapshot)["ubuntu"].version.text == "18.4"
        assert by_name(snapshot)["linux"].version.text == "5.4.0"

    def test_nvidia_gpu_versionless(self, snapshot):
        gpu = by_name(snapshot)["nvidia gpu"]
        assert gpu.version is None
        assert snapshot.layers["nvidia gpu"] is StackLayer.HARDWARE

    def test_gcc_system_library(self, snapshot):
        assert by_name(snapshot)["gcc"].version.text == "9.4.0"

    def test_capture_log_traceability(self, snapshot):
        credited = {}
        for entry in snapshot.capture_log:
            for name in entry.components:
                assert name not in credited, f"{name} credited twice"
                credited[name] = entry.command
        assert set(credited) == {vc.component for vc in snapshot.components}

    def test_deterministic(self, lexicon):
        a = snapshot_to_dict(probe_local_stack(TranscriptRunner(NATIVE_TRANSCRIPT), lexicon))
        b = snapshot_to_dict(probe_local_stack(TranscriptRunner(NATIVE_TRANSCRIPT), lexicon))
        assert a == b


class TestAppleM1Probe:
    def test_arm64_kernel_gives_versionless_m1(self, lexicon):
        snapshot = probe_local_stack(TranscriptRunner(M1_TRANSCRIPT), lexicon)
        m1 = by_name(snapshot)["apple m1"]
        assert m1.version is None
        assert snapshot.layers["apple m1"] is StackLayer.HARDWARE
        assert by_name(snapshot)["macos"].version.text == "11.6.8"


@pytest.fixture(scope="module")
def conda_snapshot(lexicon):
    return probe_local_stack(TranscriptRunner(CONDA_TRANSCRIPT), lexicon)


class TestCondaProbe:
    @pytest.fixture()
    def snapshot(self, conda_snapshot):
        return conda_snapshot

    def test_kind(self, snapshot):
        assert snapshot.environment_kind == CONDA

    def test_packages_and_drivers_from_one_listing(self, snapshot):
        names = by_name(snapshot)
        assert names["cuda"].version.text == "10.2.89"
        assert names["cudnn"].version.text == "7.6.5"
        assert names["tensorflow"].version.text == "2.2.0"

    def test_no_native_library_commands(self, snapshot):
        commands = {e.command for e in snapshot.capture_log}
        assert "gcc --version" not in commands
        assert "nvcc --version" not in commands

    def test_runtime_from_interpreter(self, snapshot):
        python = by_name(snapshot)["python"]
        assert python.version.text == "3.8.12"
        credited = {
            name: e.command for e in snapshot.capture_log for name in e.components
        }
        assert credited["python"] == "python --version"

    def test_conda_version(self, snapshot):
        assert by_name(snapshot)["anaconda"].version.text == "4.12.0"


class TestSnapshotRoundTrip:
    def test_round_trip_identity(self, tmp_path, lexicon):
        snapshot = probe_local_stack(TranscriptRunner(NATIVE_TRANSCRIPT), lexicon)
        path = tmp_path / "env.json"
        save_snapshot(snapshot, path)
        loaded = load_snapshot(path)
        assert snapshot_to_dict(loaded) == snapshot_to_dict(snapshot)
        path2 = tmp_path / "env2.json"
        save_snapshot(loaded, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_empty_round_trip(self, tmp_path):
        path = tmp_path / "env.json"
        save_snapshot(EnvSnapshot(), path)
        loaded = load_snapshot(path)
        assert loaded.components == []
        assert loaded.environment_kind == NATIVE

    def test_truncated_file(self, tmp_path):
        path = tmp_path / "env.json"
        path.write_text('{"schema_version": 1, "compo')
        with pytest.raises(SnapshotLoadError):
            load_snapshot(path)

    def test_schema_gate(self, tmp_path):
        path = tmp_path / "env.json"
        path.write_text(json.dumps({"schema_version": 12, "components": []}))
        with pytest.raises(SnapshotLoadError) as err:
            load_snapshot(path)
        assert "12" in str(err.value)

    def test_hand_built_snapshot(self, tmp_path):
        snapshot = EnvSnapshot(
            environment_kind=NATIVE,
            components=[
                VersionedComponent("cuda", parse_version("10.2")),
                VersionedComponent("numpy", parse_version("1.24")),
            ],
            layers={"cuda": StackLayer.DRIVER, "numpy": StackLayer.LIBRARY},
        )
        path = tmp_path / "env.json"
        save_snapshot(snapshot, path)
        loaded = load_snapshot(path)
        assert loaded.get("cuda").version.text == "10.2"


class TestLiveSmoke:
    """Minimal probe against the real machine; everything else uses transcripts."""

    def test_detect_environment_runs(self):
        from decide.envprobe import SystemRunner

        assert detect_environment(SystemRunner()) in (NATIVE, CONDA)

    def test_interpreter_probe_on_this_machine(self):
        from decide.envprobe import Prober, SystemRunner
        from decide.model import ComponentSpec

        trimmed = Lexicon([ComponentSpec("python", frozenset(), StackLayer.RUNTIME)])
        trimmed.probes = {
            "python": [
                {"command": "python --version", "pattern": "Python\\s+(\\d+\\.\\d+(?:\\.\\d+)?)"},
                {"command": "python3 --version", "pattern": "Python\\s+(\\d+\\.\\d+(?:\\.\\d+)?)"},
            ]
        }

        class NoListing(SystemRunner):
            def run(self, command, args=()):
                if command.startswith(("pip", "conda")):
                    return 127, "", "suppressed for the smoke test"
                return super().run(command, args)

        snapshot = Prober(NoListing(), trimmed).probe()
        python = snapshot.get("python")
        assert python is not None and python.version is not None
