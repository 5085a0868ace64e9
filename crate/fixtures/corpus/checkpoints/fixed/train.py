import os

import sagemaker
from sagemaker.estimator import Estimator

session = sagemaker.Session()

estimator = Estimator(
    image_uri=os.environ["TRAINING_IMAGE"],
    role=os.environ["SAGEMAKER_ROLE"],
    instance_count=1,
    instance_type="ml.m5.xlarge",
    output_path="s3://demo-bucket/output",
    checkpoint_s3_uri="s3://demo-bucket/checkpoints",
    checkpoint_local_path="/opt/ml/checkpoints",
    sagemaker_session=session,
)
estimator.set_hyperparameters(epochs=20, learning_rate=0.01)
estimator.fit({"train": "s3://demo-bucket/train"})
