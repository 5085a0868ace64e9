import json

import boto3
from botocore.config import Config

runtime = boto3.client("sagemaker-runtime", config=Config(retries={"mode": "adaptive", "max_attempts": 8}))


def predict(payload):
    response = runtime.invoke_endpoint(
        EndpointName="churn-endpoint",
        ContentType="application/json",
        Body=json.dumps(payload),
    )
    return json.loads(response["Body"].read())
