import os

from sagemaker.model_monitor import CronExpressionGenerator, DefaultModelMonitor

monitor = DefaultModelMonitor(
    role=os.environ["SAGEMAKER_ROLE"],
    instance_count=1,
    instance_type="ml.m5.xlarge",
)
monitor.create_monitoring_schedule(
    endpoint_input="churn-endpoint",
    output_s3_uri="s3://demo-bucket/monitoring",
    schedule_cron_expression=CronExpressionGenerator.hourly(),
)
