#include "aspecteval/prompts.hpp"

namespace aspecteval::prompts {

namespace {

const std::string k_ua_text = R"TMPL(You are tasked with evaluating two submitted responses based on the given criterion and determining which one is better, or if both are equal. Here is the data:

[BEGIN DATA]
###
[Criterion]: {criterion_description}
###
[Response 1]: {response_1}
###
[Response 2]: {response_2}
###
[END DATA]

Here are the instructions to assess and compare the two responses:
1. Review the two responses and the given criterion to write detailed feedback that assesses which of the two responses is better or equally good, strictly based on the given criterion. Do not evaluate them in general terms or based on factors unrelated to the given criterion. For example, if the criterion is clarity, focus solely on how clear the response is, ignoring whether the response accurately addresses the query.
2. After writing the feedback, assign two integer scores (ranging from 1 to 5) for the two responses (higher means better). Be sure to base your scores solely on the criterion provided.
3. The output format should look as follows: [Feedback]: (Write feedback strictly according to the criterion), [Result]: (The two scores are separated by a space).
)TMPL";

const std::string k_ua_image = R"TMPL(You will be given two images generated by two models. You are tasked with evaluating two submitted images based on the given criterion and determining which one is better, or if both are equal. Here is the data:

[BEGIN DATA]
###
[Criterion]: {criterion_description}
###
[END DATA]

Here are the instructions to assess and compare the two images:
1. Carefully review every detail of the two images and the given criterion to write detailed feedback that assesses which of the two images is better or equally good, strictly based on the given criterion. Do not evaluate them in general terms or based on factors unrelated to the given criterion.
2. After writing the feedback, assign two integer scores (ranging from 1 to 5) for the two images (higher means better). Be sure to base your scores solely on the criterion provided.
3. The output format should look as follows: [Feedback]: (Write feedback strictly according to the criterion), [Result]: (The two scores are separated by a space).
)TMPL";

const std::string k_ua_multi_image = R"TMPL(You will be given two responses, each generated by a different model. Your task is to evaluate both responses based on the given criterion and determine which one is better, or if both are equal. Each response contains a set of images. The first set, consisting of {response1_image_count} images generated by the first model, will be provided first, followed by the {response2_image_count} images generated by the second model. Please carefully divide the images into two sets. Here is the data:

[BEGIN DATA]
###
[Criterion]: {criterion_description}
###
[END DATA]

Here are the instructions to assess and compare the two responses:
1. Carefully review every detail of the images and the given criterion to write detailed feedback that assesses which of the two sets of images is better or equally good, strictly based on the given criterion. Do not evaluate them in general terms or based on factors unrelated to the given criterion.
2. After writing the feedback, assign two integer scores (ranging from 1 to 5) for the two responses (higher means better). Be sure to base your scores solely on the criterion provided.
3. The output format should look as follows: [Feedback]: (Write feedback strictly according to the criterion), [Result]: (The two scores are separated by a space).
)TMPL";

const std::string k_ta_nlg = R"TMPL(You are tasked with evaluating two responses generated based on a given query, according to the provided criterion, and determining which one is better or if both are equal. Here is the data:

[BEGIN DATA]
###
[Criterion]: {criterion_description}
###
[Query]: {query}
###
[Response 1]: {response_1}
###
[Response 2]: {response_2}
###
[END DATA]

Here are the instructions to assess and compare the two responses:
1. Review the two responses in relation to the given query and write detailed feedback that assesses which of the two responses is better or equally good, strictly based on the given criterion. Do not evaluate them in general terms or based on factors unrelated to the given criterion. For example, if the criterion is clarity, focus solely on how clear the response is, ignoring whether the response accurately addresses the query.
2. After writing your feedback, assign two integer scores (ranging from 1 to 5) for the two responses (higher means better). Be sure to base your scores solely on the criterion provided.
3. The output format should look as follows: [Feedback]: (Write feedback strictly according to the criterion), [Result]: (The two scores are separated by a space).
)TMPL";

const std::string k_ta_iu = R"TMPL(You will be given an image and a corresponding query. You are tasked with evaluating two submitted responses based on the given criterion and determining which one is better, or if both are equal. Here is the data:

[BEGIN DATA]
###
[Criterion]: {criterion_description}
###
[Query]: {query}
###
[Response 1]: {response_1}
###
[Response 2]: {response_2}
###
[END DATA]

Here are the instructions to assess and compare the two responses:
1. Carefully review the query and the corresponding image, as well as the two responses, and write detailed feedback that assesses which of the two responses is better or equally good, strictly based on the given criterion. Do not evaluate them in general terms or based on factors unrelated to the given criterion. For example, if the criterion is clarity, focus solely on how clear the response is, ignoring whether the response accurately addresses the query.
2. After writing your feedback, assign two integer scores (ranging from 1 to 5) for the two responses (higher means better). Be sure to base your scores solely on the criterion provided.
3. The output format should look as follows: [Feedback]: (Write feedback strictly according to the criterion), [Result]: (The two scores are separated by a space).
)TMPL";

const std::string k_ta_ig = R"TMPL(You will be given two images generated by two models based on the image description. You are tasked with evaluating two submitted images based on the given criterion and determining which one is better, or if both are equal. Here is the data:

[BEGIN DATA]
###
[Criterion]: {criterion_description}
###
[Image Description]: {image_description}
###
[END DATA]

Here are the instructions to assess and compare the two images:
1. Carefully review every detail of the two images, the image description, and the given criterion to write a detailed assessment, determining which of the two images is better or if they are equally good, strictly based on the provided criterion. Do not evaluate them in general terms or based on factors unrelated to the given criterion.
2. After writing the feedback, assign two integer scores (ranging from 1 to 5) for the two images (higher means better). Be sure to base your scores solely on the criterion provided.
3. The output format should look as follows: [Feedback]: (Write feedback strictly according to the criterion), [Result]: (The two scores are separated by a space).
)TMPL";

const std::string k_ta_itig_with_input = R"TMPL(You will be given two responses, each generated by a different model based on the given task. The task will provide some input contents, and both models will generate subsequent responses based on the same input contents. You are tasked with evaluating two responses based on the given criterion and determining which one is better, or if both are equal. The input contents consist of multiple text-image pairs, and the response generated by each model also includes multiple text-image pairs. The images will be provided in order and divided into three sets sequentially: the first set contains {input_content_image_count} images from the Input Contents; the second set contains {response1_image_count} images from Response 1; and the third set contains {response2_image_count} images from Response 2. Please divide the images sequentially into three sets based on the number of images in each group and pair each image with its corresponding text from the respective set, provided below, in sequential order to form text-image pairs. Here is the data:

[BEGIN DATA]
###
[Criterion]: {criterion_description}
###
[Task Description]: {task_description}
###
[Input Contents]: {input_contents}
###
[Response 1]: {response_1_texts}
###
[Response 2]: {response_2_texts}
###
[END DATA]

Here are the instructions to assess the responses:
1. Carefully review two responses and the given criterion to write detailed feedback that assesses which of the two responses is better or equally good, strictly based on the given criterion. Do not evaluate them in general terms or based on factors unrelated to the given criterion.
2. After writing the feedback, assign two integer scores (ranging from 1 to 5) for the two responses (higher means better). Be sure to base your scores solely on the criterion provided.
3. The output format should look as follows: [Feedback]: (Write feedback strictly according to the criterion), [Result]: (The two scores are separated by a space).
)TMPL";

const std::string k_ta_itig_no_input = R"TMPL(You will be given two responses, each generated by a different model based on the given task. By providing a detailed task description, two models will generate responses based on the same task. You are tasked with evaluating the two responses based on the given criteria and determining which one is better or if both are equal. The response generated by each model includes multiple text-image pairs. The images will be provided in order and divided into two sets sequentially: the first set contains {response1_image_count} images from Response 1, and the second set contains {response2_image_count} images from Response 2. Please divide the images sequentially into two sets based on the number of images in each group and pair each image with its corresponding text from the respective set, provided below, in sequential order to form text-image pairs. Here is the data:

[BEGIN DATA]
###
[Criterion]: {criterion_description}
###
[Task Description]: {task_description}
###
[Response 1]: {response_1_texts}
###
[Response 2]: {response_2_texts}
###
[END DATA]

Here are the instructions to assess the responses:
1. Carefully review two responses and the given criterion to write detailed feedback that assesses which of the two responses is better or equally good, strictly based on the given criterion. Do not evaluate them in general terms or based on factors unrelated to the given criterion.
2. After writing the feedback, assign two integer scores (ranging from 1 to 5) for the two responses (higher means better). Be sure to base your scores solely on the criterion provided.
3. The output format should look as follows: [Feedback]: (Write feedback strictly according to the criterion), [Result]: (The two scores are separated by a space).
)TMPL";

}  // namespace

const std::string& template_text(TemplateKind kind) {
    switch (kind) {
        case TemplateKind::UA_Text: return k_ua_text;
        case TemplateKind::UA_Image: return k_ua_image;
        case TemplateKind::UA_MultiImage: return k_ua_multi_image;
        case TemplateKind::TA_NLG: return k_ta_nlg;
        case TemplateKind::TA_IU: return k_ta_iu;
        case TemplateKind::TA_IG: return k_ta_ig;
        case TemplateKind::TA_ITIG_WithInput: return k_ta_itig_with_input;
        case TemplateKind::TA_ITIG_NoInput: return k_ta_itig_no_input;
    }
    throw std::logic_error("bad template kind");
}

}  // namespace aspecteval::prompts