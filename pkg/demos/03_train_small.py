"""Train and evaluate on a small synthetic corpus, end to end.

Uses a reduced CNN so it runs in under a minute on one core. Pass
--full for the benchmark size (10 classes, 4 signers, 8 reps, default CNN),
which takes much longer.
"""
import argparse
import logging
import time

from taf.classifier.training import evaluate, split_by_signer, train
from taf.pipeline import PipelineConfig, extract_samples
from taf.synth import SynthSpec, generate_corpus

parser = argparse.ArgumentParser()
parser.add_argument("--full", action="store_true")
parser.add_argument("--kf", choices=("none", "hs_dc"), default="none")
args = parser.parse_args()
logging.basicConfig(level=logging.INFO, format="%(message)s")

if args.full:
    spec = SynthSpec(num_classes=10, signers=4, reps=8)
    config = PipelineConfig(epochs=30, stop_train_acc=0.98)
else:
    spec = SynthSpec(num_classes=5, signers=3, reps=4)
    config = PipelineConfig(epochs=30, initial_filters=32, blocks=2, convs_per_block=1, stop_train_acc=0.98)
if args.kf != "none":
    config = config.replace(kf_method=args.kf, kf_k=spec.hold_count)
print(config.label(), "|", config.input_channels, "input channels")

start = time.perf_counter()
data, _ = extract_samples(generate_corpus(spec), config, spec)
print(f"extracted {data.x.shape} in {time.perf_counter() - start:.1f}s")

# signer-independent split: the last signer is never seen in training
train_set, val_set = split_by_signer(data, spec.held_out_signer)
model_config = config.model_config(spec.num_classes)
params, report = train(train_set, model_config, config.epochs, config.lr, val_set=val_set,
                       stop_train_acc=config.stop_train_acc)
top1, top5 = evaluate(params, model_config, val_set)
print(f"held-out signer {spec.held_out_signer}: accuracy {top1:.3f}, top-5 {top5:.3f}, "
      f"{len(report.epochs)} epochs, checksum {report.checksum:08x}")
