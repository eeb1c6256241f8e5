"""Snapshot a machine's installed stack through replayable commands.

The prober shells out for every layer (package listing, interpreter, driver
toolkits, OS identification, kernel info). Commands run through a runner
interface, so a recorded transcript reproduces a machine exactly: this demo
replays a CUDA workstation and an Apple-silicon laptop, then probes the real
machine it runs on.
"""

from decide import TranscriptRunner, probe_local_stack
from decide.envprobe import SystemRunner

WORKSTATION = {
    "sh -c echo $CONDA_PREFIX": {"exit": 0, "stdout": ""},
    "pip freeze": {"exit": 0, "stdout": "numpy==1.24.0\nscipy==1.7.3\ntensorflow==1.15.0\n"},
    "python --version": {"exit": 0, "stdout": "Python 3.6.9\n"},
    "nvcc --version": {"exit": 0, "stdout": "Cuda compilation tools, release 10.2, V10.2.89\n"},
    "nvidia-smi": {
        "exit": 0,
        "stdout": "| NVIDIA-SMI 440.33.01  Driver Version: 440.33.01  CUDA Version: 10.2 |\n",
    },
    "cat /etc/os-release": {"exit": 0, "stdout": 'ID=ubuntu\nVERSION_ID="18.04"\n'},
    "uname -sr": {"exit": 0, "stdout": "Linux 5.4.0-100-generic\n"},
    "uname -a": {"exit": 0, "stdout": "Linux gpu-box 5.4.0 x86_64 GNU/Linux\n"},
    "uname -m": {"exit": 0, "stdout": "x86_64\n"},
}

LAPTOP = {
    "sh -c echo $CONDA_PREFIX": {"exit": 0, "stdout": ""},
    "pip freeze": {"exit": 0, "stdout": "scikit-learn==1.0\n"},
    "python --version": {"exit": 0, "stdout": "Python 3.9.7\n"},
    "sw_vers -productVersion": {"exit": 0, "stdout": "11.6.8\n"},
    "uname -a": {"exit": 0, "stdout": "Darwin mac.local 20.6.0 RELEASE_ARM64_T8101 arm64\n"},
}

for label, transcript in [("CUDA workstation", WORKSTATION), ("Apple-silicon laptop", LAPTOP)]:
    snapshot = probe_local_stack(TranscriptRunner(transcript))
    print(f"{label} ({snapshot.environment_kind}):")
    for comp in snapshot.sorted_components():
        layer = snapshot.layers[comp.component].value
        print(f"   {str(comp):24} [{layer}]")
    print()

print("this machine:")
live = probe_local_stack(SystemRunner())
for comp in live.sorted_components()[:10]:
    print(f"   {comp}")
if len(live.components) > 10:
    print(f"   ... and {len(live.components) - 10} more")
